#include "settings.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>

#include "cdfest/error.hpp"

namespace cdfest::cli {

namespace pt = boost::property_tree;

namespace {

std::string strip_comment(std::string v) {
  const auto cut = v.find_first_of(";#");
  if (cut != std::string::npos) v.erase(cut);
  const auto end = v.find_last_not_of(" \t");
  v.erase(end == std::string::npos ? 0 : end + 1);
  return v;
}

}  // namespace

const std::map<std::string, std::string>& Settings::defaults() {
  static const std::map<std::string, std::string> d{
      {"pipeline.seed", "0"},
      {"training.mode", "data"},
      {"training.epochs", "1000"},
      {"training.learning_rate", "0.01"},
      {"training.components", "1000"},
      {"training.depth", "2"},
      {"training.width", "3"},
      {"training.batch_size", "0"},
      {"training.seed", "0"},
      {"training.discard_threshold", "1e8"},
      {"eval.queries", "500"},
      {"eval.workload_seed", "0"},
      {"eval.warmup", "50"},
      {"eval.repetitions", "1"},
      {"eval.naive_max_dims", "12"},
      {"eval.naive_repetitions", "1"},
      {"eval.naive_max_queries", "20"},
      {"eval.cases", "1000"},
      {"eval.stability_repeats", "2000"},
      {"eval.suite_seed", "0"},
      {"eval.consistency_tolerance", "1e-10"},
      {"eval.bench_rows", "10000"},
      {"eval.bench_queries", "100"},
      {"eval.bench_epochs", "0"},
  };
  return d;
}

Settings::Settings() : values_(defaults()) {}

void Settings::set(const std::string& key, const std::string& value) {
  if (!defaults().contains(key)) throw UsageError("unknown setting '" + key + "'");
  values_[key] = value;
}

void Settings::load_file(const std::filesystem::path& path) {
  pt::ptree tree;
  try {
    pt::read_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw UsageError("config file: " + std::string(e.what()));
  }
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw UsageError("config file: key '" + section + "' outside a section");
    for (const auto& [key, value] : body) {
      const std::string full = section + "." + key;
      if (!defaults().contains(full)) {
        throw UsageError("config file " + path.string() + ": unknown key '" + key + "' in [" + section + "]");
      }
      values_[full] = strip_comment(value.data());
    }
  }
}

const std::string& Settings::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw UsageError("unknown setting '" + key + "'");
  return it->second;
}

double Settings::real(const std::string& key) const {
  const std::string& s = get(key);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw UsageError("setting " + key + " = '" + s + "' is not a number");
  }
  return v;
}

std::uint64_t Settings::integer(const std::string& key) const {
  const std::string& s = get(key);
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw UsageError("setting " + key + " = '" + s + "' is not a non-negative integer");
  }
  return v;
}

TrainConfig Settings::training() const {
  TrainConfig c;
  try {
    c.mode = train_mode_from_string(get("training.mode"));
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  c.epochs = integer("training.epochs");
  c.learning_rate = real("training.learning_rate");
  c.components = integer("training.components");
  c.depth = static_cast<int>(integer("training.depth"));
  c.width = static_cast<int>(integer("training.width"));
  c.batch_size = integer("training.batch_size");
  c.seed = integer("training.seed");
  c.discard_threshold = real("training.discard_threshold");
  try {
    c.validate();
  } catch (const InvalidInput& e) {
    throw UsageError(e.what());
  }
  return c;
}

BenchOptions Settings::bench() const {
  BenchOptions b;
  b.warmup = integer("eval.warmup");
  b.repetitions = integer("eval.repetitions");
  b.naive_max_dims = integer("eval.naive_max_dims");
  b.naive_repetitions = integer("eval.naive_repetitions");
  b.naive_max_queries = integer("eval.naive_max_queries");
  return b;
}

PropertyOptions Settings::properties() const {
  PropertyOptions p;
  p.cases = integer("eval.cases");
  p.stability_repeats = integer("eval.stability_repeats");
  p.seed = integer("eval.suite_seed");
  p.consistency_tolerance = real("eval.consistency_tolerance");
  if (p.cases == 0) throw UsageError("eval.cases must be at least 1");
  return p;
}

}  // namespace cdfest::cli
