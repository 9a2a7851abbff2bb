#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "changedet/changedet.h"

namespace {

int exit_code(cd_status s) {
  switch (s) {
    case CD_OK: return 0;
    case CD_ERR_CONFIG: return 2;
    case CD_ERR_DATA: return 3;
    case CD_ERR_NUMERIC: return 4;
    default: return 1;
  }
}

const char* kind_name(cd_status s) {
  switch (s) {
    case CD_ERR_CONFIG: return "config";
    case CD_ERR_DATA: return "data";
    case CD_ERR_NUMERIC: return "numeric";
    case CD_ERR_ARGUMENT: return "argument";
    default: return "internal";
  }
}

// One line on stderr: "error code=<n> kind=<kind> message=<text>".
int report(cd_status s) {
  if (s == CD_OK) return 0;
  std::string msg = cd_last_error();
  for (char& c : msg)
    if (c == '\n' || c == '\r') c = ' ';
  std::fprintf(stderr, "error code=%d kind=%s message=%s\n", exit_code(s), kind_name(s), msg.c_str());
  return exit_code(s);
}

void print_line(const char* line, void*) {
  std::fprintf(stderr, "%s\n", line);
  std::fflush(stderr);
}

struct CloudHandle {
  cd_cloud* ptr = nullptr;
  ~CloudHandle() { cd_cloud_free(ptr); }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Point-cloud change detection between two epochs"};
  app.require_subcommand(1);
  app.footer(
      "Exit codes: 0 success, 1 internal error, 2 usage or configuration error, 3 data error,\n"
      "4 numeric failure (non-finite loss, failed gradient check). Failures print one line\n"
      "on stderr: error code=<n> kind=<kind> message=<text>");

  std::string config, out, data, checkpoint, t1, t2, pred, truth, colors, report_path;
  double threshold = 0.0;

  auto* synth = app.add_subcommand("synth", "Generate labeled synthetic scene pairs");
  synth->add_option("--config", config, "Run configuration file (key = value)")->required();
  synth->add_option("--out", out, "Output directory for scenes and manifest")->required();

  auto* train = app.add_subcommand("train", "Train the change network on a scene directory");
  train->add_option("--config", config, "Run configuration file (key = value)")->required();
  train->add_option("--data", data, "Scene directory written by synth")->required();
  train->add_option("--out", out, "Output directory for checkpoints and metrics.csv")->required();

  auto* infer = app.add_subcommand("infer", "Predict per-point change on the later epoch");
  infer->add_option("--checkpoint", checkpoint, "Model checkpoint (with .manifest sidecar)")->required();
  infer->add_option("--t1", t1, "Earlier epoch cloud (.xyz)")->required();
  infer->add_option("--t2", t2, "Later epoch cloud (.xyz or .xyzl)")->required();
  infer->add_option("--out", out, "Output predictions (.xyzl)")->required();

  auto* evalc = app.add_subcommand("eval", "Score predictions against ground truth");
  evalc->add_option("--pred", pred, "Predicted labels (.xyzl)")->required();
  evalc->add_option("--truth", truth, "Ground-truth labels (.xyzl)")->required();
  evalc->add_option("--colors", colors, "Write per-point TP/TN/FP/FN color codes to this file");
  evalc->add_option("--report", report_path, "Write the metrics as key = value lines to this file");

  auto* baseline = app.add_subcommand("baseline", "Cloud-to-cloud distance thresholding");
  baseline->add_option("--t1", t1, "Earlier epoch cloud (.xyz)")->required();
  baseline->add_option("--t2", t2, "Later epoch cloud (.xyz or .xyzl)")->required();
  baseline->add_option("--threshold", threshold, "Distance threshold in meters (> 0)")->required();
  baseline->add_option("--out", out, "Output labels (.xyzl)")->required();

  auto* gradcheck = app.add_subcommand("gradcheck", "Run the finite-difference gradient suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    std::fprintf(stderr, "error code=2 kind=usage message=%s\n", msg.c_str());
    return 2;
  }

  if (synth->parsed()) return report(cd_synth_run(config.c_str(), out.c_str()));
  if (train->parsed()) return report(cd_train_run(config.c_str(), data.c_str(), out.c_str(), print_line, nullptr));

  if (infer->parsed()) {
    cd_model* model = nullptr;
    if (cd_status s = cd_model_load(checkpoint.c_str(), &model); s != CD_OK) return report(s);
    CloudHandle a, b, result;
    cd_status s = cd_cloud_load(t1.c_str(), &a.ptr);
    if (s == CD_OK) s = cd_cloud_load(t2.c_str(), &b.ptr);
    if (s == CD_OK) s = cd_model_predict(model, a.ptr, b.ptr, &result.ptr);
    if (s == CD_OK) s = cd_cloud_save(result.ptr, out.c_str());
    cd_model_free(model);
    return report(s);
  }

  if (evalc->parsed()) {
    CloudHandle p, t;
    cd_metric_report r{};
    cd_status s = cd_cloud_load(pred.c_str(), &p.ptr);
    if (s == CD_OK) s = cd_cloud_load(truth.c_str(), &t.ptr);
    if (s == CD_OK) s = cd_evaluate(p.ptr, t.ptr, &r);
    if (s == CD_OK && !colors.empty()) s = cd_export_colors(p.ptr, t.ptr, colors.c_str());
    if (s != CD_OK) return report(s);
    std::string table(cd_report_table(&r, nullptr, 0) + 1, '\0');
    cd_report_table(&r, table.data(), table.size());
    std::fputs(table.c_str(), stdout);
    if (!report_path.empty()) {
      std::string kv(cd_report_key_values(&r, nullptr, 0) + 1, '\0');
      cd_report_key_values(&r, kv.data(), kv.size());
      std::FILE* f = std::fopen(report_path.c_str(), "wb");
      if (!f || std::fputs(kv.c_str(), f) < 0) {
        if (f) std::fclose(f);
        std::fprintf(stderr, "error code=3 kind=data message=cannot write %s\n", report_path.c_str());
        return 3;
      }
      std::fclose(f);
    }
    return 0;
  }

  if (baseline->parsed()) {
    CloudHandle a, b, result;
    cd_status s = cd_cloud_load(t1.c_str(), &a.ptr);
    if (s == CD_OK) s = cd_cloud_load(t2.c_str(), &b.ptr);
    if (s == CD_OK) s = cd_baseline_c2c(a.ptr, b.ptr, threshold, &result.ptr);
    if (s == CD_OK) s = cd_cloud_save(result.ptr, out.c_str());
    return report(s);
  }

  if (gradcheck->parsed()) {
    int passed = 0;
    auto log = [](const char* line, void*) { std::printf("%s\n", line); std::fflush(stdout); };
    return report(cd_gradcheck_run(log, nullptr, &passed));
  }
  return 1;
}
