#include "config/run_config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "common/errors.hpp"
#include "pc/point_cloud.hpp"

namespace cd::config {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// Shortest text that reads back to the same double.
std::string num(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

struct Reader {
  const Entry& e;
  const std::string& source;

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError(source + ":" + std::to_string(e.line) + ": " + e.key + ": " + what);
  }
  double real() const {
    double v = 0;
    const auto* end = e.value.data() + e.value.size();
    const auto [p, ec] = std::from_chars(e.value.data(), end, v);
    if (ec != std::errc() || p != end || !std::isfinite(v)) fail("expected a number, got '" + e.value + "'");
    return v;
  }
  std::uint64_t integer() const {
    std::uint64_t v = 0;
    const auto* end = e.value.data() + e.value.size();
    const auto [p, ec] = std::from_chars(e.value.data(), end, v);
    if (ec != std::errc() || p != end) fail("expected a non-negative integer, got '" + e.value + "'");
    return v;
  }
  std::size_t positive() const {
    const auto v = integer();
    if (v == 0) fail("must be >= 1");
    return static_cast<std::size_t>(v);
  }
  std::array<std::size_t, net::kLevels> levels() const {
    std::array<std::size_t, net::kLevels> out{};
    std::stringstream in(e.value);
    std::string tok;
    std::size_t n = 0;
    while (std::getline(in, tok, ',')) {
      tok = trim(tok);
      std::size_t v = 0;
      const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc() || p != tok.data() + tok.size() || v == 0 || n >= out.size()) {
        fail("expected " + std::to_string(net::kLevels) + " comma-separated positive integers");
      }
      out[n++] = v;
    }
    if (n != out.size()) fail("expected " + std::to_string(net::kLevels) + " values");
    return out;
  }
};

std::string join(const std::array<std::size_t, net::kLevels>& a) {
  std::string s;
  for (std::size_t i = 0; i < a.size(); ++i) s += (i ? "," : "") + std::to_string(a[i]);
  return s;
}

using Setter = std::function<void(RunConfig&, const Reader&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"scene.kind", [](RunConfig& c, const Reader& r) {
         if (r.e.value == "ground") c.dataset.scene.kind = synth::SurfaceKind::Ground;
         else if (r.e.value == "tunnel") c.dataset.scene.kind = synth::SurfaceKind::Tunnel;
         else r.fail("expected ground or tunnel");
       }},
      {"scene.extent", [](RunConfig& c, const Reader& r) { c.dataset.scene.extent = r.real(); }},
      {"scene.radius", [](RunConfig& c, const Reader& r) { c.dataset.scene.radius = r.real(); }},
      {"scene.density", [](RunConfig& c, const Reader& r) { c.dataset.scene.density = r.real(); }},
      {"scene.noise", [](RunConfig& c, const Reader& r) { c.dataset.scene.noise = r.real(); }},
      {"scene.margin", [](RunConfig& c, const Reader& r) { c.dataset.scene.margin = r.real(); }},
      {"scene.band", [](RunConfig& c, const Reader& r) { c.dataset.scene.band = r.real(); }},
      {"scene.layout", [](RunConfig& c, const Reader& r) {
         if (r.e.value == "fixed") c.dataset.scene.layout = synth::Layout::Fixed;
         else if (r.e.value == "random") c.dataset.scene.layout = synth::Layout::Random;
         else r.fail("expected fixed or random");
       }},
      {"scene.ops", [](RunConfig& c, const Reader& r) {
         try {
           c.dataset.scene.ops = synth::parse_ops(r.e.value);
         } catch (const ConfigError& err) {
           r.fail(err.what());
         }
       }},
      {"scene.seed", [](RunConfig& c, const Reader& r) { c.dataset.scene.seed = r.integer(); }},
      {"scene.count", [](RunConfig& c, const Reader& r) { c.dataset.count = r.positive(); }},
      {"scene.test_count", [](RunConfig& c, const Reader& r) { c.dataset.test_count = r.integer(); }},
      {"net.ratios", [](RunConfig& c, const Reader& r) { c.net.ratios = r.levels(); }},
      {"net.channels", [](RunConfig& c, const Reader& r) { c.net.channels = r.levels(); }},
      {"net.group_k", [](RunConfig& c, const Reader& r) { c.net.group_k = r.positive(); }},
      {"net.k", [](RunConfig& c, const Reader& r) { c.net.attn_k = r.positive(); }},
      {"net.cross_k", [](RunConfig& c, const Reader& r) { c.net.cross_k = r.positive(); }},
      {"net.diff_k", [](RunConfig& c, const Reader& r) { c.net.diff_k = r.positive(); }},
      {"net.min_points", [](RunConfig& c, const Reader& r) { c.net.min_points = r.positive(); }},
      {"net.seed", [](RunConfig& c, const Reader& r) { c.net.seed = r.integer(); }},
      // Attention normalization. Only softmax followed by L1 renormalization
      // is implemented; dividing raw logits by their absolute sum is reserved.
      {"net.rho", [](RunConfig&, const Reader& r) {
         if (r.e.value == "l1_abs") r.fail("l1_abs is reserved and not implemented; use softmax_l1");
         if (r.e.value != "softmax_l1") r.fail("expected softmax_l1");
       }},
      {"train.lr", [](RunConfig& c, const Reader& r) { c.train.lr = r.real(); }},
      {"train.optimizer", [](RunConfig& c, const Reader& r) {
         if (r.e.value == "adam") c.train.optimizer = train::OptimizerKind::Adam;
         else if (r.e.value == "sgd") c.train.optimizer = train::OptimizerKind::Sgd;
         else r.fail("expected adam or sgd");
       }},
      {"train.schedule", [](RunConfig& c, const Reader& r) {
         if (r.e.value == "constant") c.train.schedule = train::LrSchedule::Constant;
         else if (r.e.value == "cosine") c.train.schedule = train::LrSchedule::Cosine;
         else r.fail("expected constant or cosine");
       }},
      {"train.augment", [](RunConfig& c, const Reader& r) {
         if (r.e.value == "true") c.train.augment = true;
         else if (r.e.value == "false") c.train.augment = false;
         else r.fail("expected true or false");
       }},
      {"train.beta1", [](RunConfig& c, const Reader& r) { c.train.beta1 = r.real(); }},
      {"train.beta2", [](RunConfig& c, const Reader& r) { c.train.beta2 = r.real(); }},
      {"train.eps", [](RunConfig& c, const Reader& r) { c.train.eps = r.real(); }},
      {"train.epochs", [](RunConfig& c, const Reader& r) { c.train.epochs = r.integer(); }},
      {"train.steps_per_epoch", [](RunConfig& c, const Reader& r) { c.train.steps_per_epoch = r.positive(); }},
      {"train.class_weights", [](RunConfig& c, const Reader& r) {
         if (r.e.value == "auto") {
           c.train.class_weights.reset();
           return;
         }
         std::array<double, 2> w{};
         std::stringstream in(r.e.value);
         std::string tok;
         std::size_t n = 0;
         while (std::getline(in, tok, ',')) {
           tok = trim(tok);
           double v = 0;
           const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
           if (ec != std::errc() || p != tok.data() + tok.size() || !(v > 0) || !std::isfinite(v) || n >= 2) {
             r.fail("expected 'auto' or two positive numbers 'w0,w1'");
           }
           w[n++] = v;
         }
         if (n != 2) r.fail("expected 'auto' or two positive numbers 'w0,w1'");
         c.train.class_weights = w;
       }},
      {"train.seed", [](RunConfig& c, const Reader& r) { c.train.seed = r.integer(); }},
      {"train.chunk", [](RunConfig& c, const Reader& r) { c.train.chunk = r.positive(); }},
      {"train.change_focus", [](RunConfig& c, const Reader& r) { c.train.change_focus = r.real(); }},
      {"train.grad_clip", [](RunConfig& c, const Reader& r) { c.train.grad_clip = r.real(); }},
      {"train.checkpoint_every", [](RunConfig& c, const Reader& r) { c.train.checkpoint_every = r.integer(); }},
  };
  return table;
}

void validate(const RunConfig& c, const std::string& source) {
  auto bad = [&](const std::string& what) { throw ConfigError(source + ": " + what); };
  if (!(c.train.lr >= 0.0)) bad("train.lr must be >= 0");
  if (!(c.train.beta1 >= 0.0 && c.train.beta1 < 1.0)) bad("train.beta1 must be in [0, 1)");
  if (!(c.train.beta2 >= 0.0 && c.train.beta2 < 1.0)) bad("train.beta2 must be in [0, 1)");
  if (!(c.train.eps > 0.0)) bad("train.eps must be > 0");
  if (c.train.chunk < 64) bad("train.chunk must be >= 64");
  if (!(c.train.change_focus >= 0.0 && c.train.change_focus <= 1.0)) {
    bad("train.change_focus must be in [0, 1]");
  }
  if (!(c.train.grad_clip >= 0.0 && std::isfinite(c.train.grad_clip))) bad("train.grad_clip must be >= 0");
  if (c.dataset.test_count >= c.dataset.count) bad("scene.test_count must be < scene.count");
}

}  // namespace

std::vector<Entry> parse_entries(std::string_view text, const std::string& source) {
  std::vector<Entry> out;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const std::string_view raw = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    Entry e{trim(std::string_view(line).substr(0, eq)), trim(std::string_view(line).substr(eq + 1)), line_no};
    if (e.key.empty()) throw ConfigError(source + ":" + std::to_string(line_no) + ": empty key");
    if (!seen.insert(e.key).second) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": duplicate key " + e.key);
    }
    out.push_back(std::move(e));
  }
  return out;
}

RunConfig resolve(const std::vector<Entry>& entries, const std::string& source) {
  RunConfig cfg;
  const auto& table = setters();
  for (const Entry& e : entries) {
    const auto it = table.find(e.key);
    if (it == table.end()) {
      throw ConfigError(source + ":" + std::to_string(e.line) + ": unknown key " + e.key);
    }
    it->second(cfg, Reader{e, source});
  }
  validate(cfg, source);
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = pc::read_text_file(path);
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  return resolve(parse_entries(text, path.string()), path.string());
}

std::vector<std::pair<std::string, std::string>> net_entries(const net::NetConfig& n) {
  return {{"net.ratios", join(n.ratios)},
          {"net.channels", join(n.channels)},
          {"net.group_k", std::to_string(n.group_k)},
          {"net.k", std::to_string(n.attn_k)},
          {"net.cross_k", std::to_string(n.cross_k)},
          {"net.diff_k", std::to_string(n.diff_k)},
          {"net.min_points", std::to_string(n.min_points)},
          {"net.seed", std::to_string(n.seed)},
          {"net.rho", "softmax_l1"}};
}

std::vector<std::pair<std::string, std::string>> train_entries(const train::TrainConfig& t) {
  std::string weights = "auto";
  if (t.class_weights) weights = num((*t.class_weights)[0]) + "," + num((*t.class_weights)[1]);
  return {{"train.lr", num(t.lr)},
          {"train.optimizer", t.optimizer == train::OptimizerKind::Adam ? "adam" : "sgd"},
          {"train.schedule", t.schedule == train::LrSchedule::Cosine ? "cosine" : "constant"},
          {"train.augment", t.augment ? "true" : "false"},
          {"train.beta1", num(t.beta1)},
          {"train.beta2", num(t.beta2)},
          {"train.eps", num(t.eps)},
          {"train.epochs", std::to_string(t.epochs)},
          {"train.steps_per_epoch", std::to_string(t.steps_per_epoch)},
          {"train.class_weights", weights},
          {"train.seed", std::to_string(t.seed)},
          {"train.chunk", std::to_string(t.chunk)},
          {"train.change_focus", num(t.change_focus)},
          {"train.grad_clip", num(t.grad_clip)},
          {"train.checkpoint_every", std::to_string(t.checkpoint_every)}};
}

std::string format_resolved(const RunConfig& cfg) {
  std::string out;
  auto add = [&](const auto& entries) {
    for (const auto& [k, v] : entries) out += k + " = " + v + "\n";
  };
  add(synth::spec_entries(cfg.dataset.scene));
  out += "scene.count = " + std::to_string(cfg.dataset.count) + "\n";
  out += "scene.test_count = " + std::to_string(cfg.dataset.test_count) + "\n";
  add(net_entries(cfg.net));
  add(train_entries(cfg.train));
  return out;
}

}  // namespace cd::config
