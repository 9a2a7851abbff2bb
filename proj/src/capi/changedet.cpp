#include "changedet/changedet.h"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <exception>
#include <string>

#include "common/errors.hpp"
#include "config/run_config.hpp"
#include "eval/metrics.hpp"
#include "network/gradient_suite.hpp"
#include "pc/point_cloud.hpp"
#include "synth/scene.hpp"
#include "training/trainer.hpp"

struct cd_cloud {
  cd::pc::LabeledPointCloud cloud;
};

struct cd_model {
  cd::train::LoadedModel model;
};

namespace {

thread_local std::string last_error;

cd_status fail(cd_status s, const std::string& what) {
  last_error = what;
  return s;
}

template <typename F>
cd_status guarded(F&& f) {
  try {
    last_error.clear();
    return f();
  } catch (const cd::ConfigError& e) {
    return fail(CD_ERR_CONFIG, std::string("config: ") + e.what());
  } catch (const cd::DataError& e) {
    return fail(CD_ERR_DATA, std::string("data: ") + e.what());
  } catch (const cd::NumericError& e) {
    return fail(CD_ERR_NUMERIC, std::string("numeric: ") + e.what());
  } catch (const std::exception& e) {
    return fail(CD_ERR_INTERNAL, std::string("internal: ") + e.what());
  } catch (...) {
    return fail(CD_ERR_INTERNAL, "internal: unknown exception");
  }
}

#define CD_REQUIRE(ptr) \
  if (!(ptr)) return fail(CD_ERR_ARGUMENT, "argument: " #ptr " is null")

cd::eval::MetricReport to_report(const cd_metric_report& r) {
  cd::eval::MetricReport m;
  m.oa = r.oa;
  m.mrecall = r.mrecall;
  m.mprecision = r.mprecision;
  m.mf1 = r.mf1;
  m.miou = r.miou;
  m.counts = {r.tp, r.tn, r.fp, r.fn};
  m.undefined = r.undefined != 0;
  return m;
}

size_t copy_out(const std::string& s, char* buf, size_t cap) {
  if (buf && cap > 0) {
    const size_t n = std::min(cap - 1, s.size());
    std::memcpy(buf, s.data(), n);
    buf[n] = '\0';
  }
  return s.size();
}

void check_same_points(const cd::pc::LabeledPointCloud& a, const cd::pc::LabeledPointCloud& b) {
  if (a.size() != b.size()) {
    throw cd::DataError("prediction has " + std::to_string(a.size()) + " points, truth has " +
                        std::to_string(b.size()));
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (cd::distance(a.points()[i], b.points()[i]) > 1e-5) {
      throw cd::DataError("prediction and truth differ at point " + std::to_string(i));
    }
  }
}

}  // namespace

extern "C" {

const char* cd_last_error(void) { return last_error.c_str(); }

const char* cd_version(void) { return "0.1.0"; }

cd_status cd_cloud_load(const char* path, cd_cloud** out) {
  CD_REQUIRE(path);
  CD_REQUIRE(out);
  return guarded([&] {
    *out = new cd_cloud{cd::pc::load_cloud(path)};
    return CD_OK;
  });
}

cd_status cd_cloud_create(const double* xyz, size_t count, const uint8_t* labels, cd_cloud** out) {
  CD_REQUIRE(out);
  if (count > 0) CD_REQUIRE(xyz);
  return guarded([&] {
    cd::PointSet pts(count);
    for (size_t i = 0; i < count; ++i) pts[i] = {xyz[3 * i], xyz[3 * i + 1], xyz[3 * i + 2]};
    std::optional<std::vector<cd::pc::Label>> l;
    if (labels) l.emplace(labels, labels + count);
    *out = new cd_cloud{cd::pc::LabeledPointCloud("memory", cd::pc::Epoch::T1, std::move(pts), std::move(l))};
    return CD_OK;
  });
}

cd_status cd_cloud_save(const cd_cloud* cloud, const char* path) {
  CD_REQUIRE(cloud);
  CD_REQUIRE(path);
  return guarded([&] {
    cd::pc::save_cloud(cloud->cloud, path);
    return CD_OK;
  });
}

size_t cd_cloud_size(const cd_cloud* cloud) { return cloud ? cloud->cloud.size() : 0; }

int cd_cloud_has_labels(const cd_cloud* cloud) { return cloud && cloud->cloud.has_labels() ? 1 : 0; }

cd_status cd_cloud_points(const cd_cloud* cloud, double* xyz) {
  CD_REQUIRE(cloud);
  CD_REQUIRE(xyz);
  const auto& p = cloud->cloud.points();
  for (size_t i = 0; i < p.size(); ++i) {
    xyz[3 * i] = p[i].x;
    xyz[3 * i + 1] = p[i].y;
    xyz[3 * i + 2] = p[i].z;
  }
  return CD_OK;
}

cd_status cd_cloud_labels(const cd_cloud* cloud, uint8_t* labels) {
  CD_REQUIRE(cloud);
  CD_REQUIRE(labels);
  if (!cloud->cloud.has_labels()) return fail(CD_ERR_DATA, "data: cloud has no labels");
  const auto& l = cloud->cloud.labels();
  std::copy(l.begin(), l.end(), labels);
  return CD_OK;
}

void cd_cloud_free(cd_cloud* cloud) { delete cloud; }

cd_status cd_synth_run(const char* config_path, const char* out_dir) {
  CD_REQUIRE(config_path);
  CD_REQUIRE(out_dir);
  return guarded([&] {
    const cd::config::RunConfig cfg = cd::config::load_run_config(config_path);
    cd::synth::write_dataset(cfg.dataset, out_dir);
    cd::pc::write_text_file(std::filesystem::path(out_dir) / "config.resolved",
                            cd::config::format_resolved(cfg));
    return CD_OK;
  });
}

cd_status cd_train_run(const char* config_path, const char* data_dir, const char* out_dir,
                       cd_log_fn log, void* user) {
  CD_REQUIRE(config_path);
  CD_REQUIRE(data_dir);
  CD_REQUIRE(out_dir);
  return guarded([&] {
    const cd::config::RunConfig cfg = cd::config::load_run_config(config_path);
    const auto scenes = cd::train::load_scene_set(data_dir);
    std::filesystem::create_directories(out_dir);
    cd::pc::write_text_file(std::filesystem::path(out_dir) / "config.resolved",
                            cd::config::format_resolved(cfg));
    cd::train::LogFn fn;
    if (log) fn = [&](const std::string& line) { log(line.c_str(), user); };
    cd::train::fit(cfg.net, cfg.train, scenes, out_dir, fn);
    return CD_OK;
  });
}

cd_status cd_model_load(const char* checkpoint_path, cd_model** out) {
  CD_REQUIRE(checkpoint_path);
  CD_REQUIRE(out);
  return guarded([&] {
    *out = new cd_model{cd::train::load_model(checkpoint_path)};
    return CD_OK;
  });
}

cd_status cd_model_predict(cd_model* model, const cd_cloud* t1, const cd_cloud* t2, cd_cloud** out) {
  CD_REQUIRE(model);
  CD_REQUIRE(t1);
  CD_REQUIRE(t2);
  CD_REQUIRE(out);
  return guarded([&] {
    cd::train::ScenePair pair;
    pair.id = "predict";
    pair.t1 = t1->cloud.points();
    pair.t2 = t2->cloud.points();
    pair.labels.assign(pair.t2.size(), 0);
    if (pair.t1.empty() || pair.t2.empty()) throw cd::DataError("predict: both clouds must be non-empty");
    const cd::train::IndexedPair indexed(pair);
    const auto logits = cd::train::predict_scene(model->model.weights, indexed, model->model.chunk);
    *out = new cd_cloud{cd::pc::LabeledPointCloud("prediction", cd::pc::Epoch::T2, pair.t2,
                                                  cd::train::argmax_labels(logits))};
    return CD_OK;
  });
}

void cd_model_free(cd_model* model) { delete model; }

cd_status cd_baseline_c2c(const cd_cloud* t1, const cd_cloud* t2, double threshold, cd_cloud** out) {
  CD_REQUIRE(t1);
  CD_REQUIRE(t2);
  CD_REQUIRE(out);
  return guarded([&] {
    auto labels = cd::eval::c2c_baseline(t1->cloud.points(), t2->cloud.points(), threshold);
    *out = new cd_cloud{cd::pc::LabeledPointCloud("c2c", cd::pc::Epoch::T2, t2->cloud.points(),
                                                  std::move(labels))};
    return CD_OK;
  });
}

cd_status cd_evaluate(const cd_cloud* pred, const cd_cloud* truth, cd_metric_report* out) {
  CD_REQUIRE(pred);
  CD_REQUIRE(truth);
  CD_REQUIRE(out);
  return guarded([&] {
    if (!pred->cloud.has_labels() || !truth->cloud.has_labels()) {
      throw cd::DataError("evaluate: prediction and truth must both carry labels");
    }
    check_same_points(pred->cloud, truth->cloud);
    const auto r = cd::eval::metrics(cd::eval::confusion(pred->cloud.labels(), truth->cloud.labels()));
    *out = {r.oa, r.mrecall, r.mprecision, r.mf1, r.miou, r.counts.tp, r.counts.tn,
            r.counts.fp, r.counts.fn, r.undefined ? 1 : 0};
    return CD_OK;
  });
}

size_t cd_report_table(const cd_metric_report* report, char* buf, size_t cap) {
  if (!report) return 0;
  return copy_out(cd::eval::format_table(to_report(*report)), buf, cap);
}

size_t cd_report_key_values(const cd_metric_report* report, char* buf, size_t cap) {
  if (!report) return 0;
  return copy_out(cd::eval::format_key_values(to_report(*report)), buf, cap);
}

cd_status cd_export_colors(const cd_cloud* pred, const cd_cloud* truth, const char* path) {
  CD_REQUIRE(pred);
  CD_REQUIRE(truth);
  CD_REQUIRE(path);
  return guarded([&] {
    if (!pred->cloud.has_labels() || !truth->cloud.has_labels()) {
      throw cd::DataError("colors: prediction and truth must both carry labels");
    }
    check_same_points(pred->cloud, truth->cloud);
    cd::pc::write_text_file(path, cd::eval::format_colors(truth->cloud.points(), pred->cloud.labels(),
                                                          truth->cloud.labels()));
    return CD_OK;
  });
}

cd_status cd_gradcheck_run(cd_log_fn log, void* user, int* passed) {
  return guarded([&] {
    bool ok = true;
    cd::net::run_gradient_suite([&](const cd::net::GradientCheckOutcome& o) {
      ok = ok && o.passed();
      if (log) {
        char line[256];
        std::snprintf(line, sizeof line, "%s %s max_rel_err=%.3e tol=%.0e probes=%zu time=%.2fs",
                      o.passed() ? "PASS" : "FAIL", o.name.c_str(), o.max_relative_error,
                      o.tolerance, o.probes, o.seconds);
        log(line, user);
      }
    });
    if (passed) *passed = ok ? 1 : 0;
    if (!ok) return fail(CD_ERR_NUMERIC, "numeric: gradient check exceeded tolerance");
    return CD_OK;
  });
}

}  // extern "C"
