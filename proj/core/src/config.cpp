#include "anchorflow/config.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "anchorflow/csv.hpp"

namespace af {

namespace {

struct Entry {
  std::string value;
  int line = 0;
  bool used = false;
};

/// Flat key-value document: `key = value`, one per line, '#' comments.
struct KeyValueDoc {
  std::map<std::string, Entry> entries;
  std::string origin;

  bool has(const std::string& key) const { return entries.count(key) > 0; }

  const Entry* take(const std::string& key) {
    auto it = entries.find(key);
    if (it == entries.end()) return nullptr;
    it->second.used = true;
    return &it->second;
  }

  void reject_unused() const {
    for (const auto& [key, entry] : entries)
      if (!entry.used)
        throw ConfigError(origin + ":" + std::to_string(entry.line) + ": unknown key '" + key +
                          "'");
  }
};

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

KeyValueDoc parse_document(const std::string& text, const std::string& origin) {
  KeyValueDoc doc;
  doc.origin = origin;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    if (doc.entries.count(key))
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    doc.entries[key] = Entry{value, lineno, false};
  }
  return doc;
}

std::vector<std::string> tokens(const std::string& value) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : value) {
    if (c == ' ' || c == '\t' || c == ',') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

[[noreturn]] void fail(const KeyValueDoc& doc, const Entry& e, const std::string& msg) {
  throw ConfigError(doc.origin + ":" + std::to_string(e.line) + ": " + msg);
}

double parse_real(const KeyValueDoc& doc, const Entry& e, const std::string& token) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(token, &pos);
    if (pos != token.size()) fail(doc, e, "trailing characters in number '" + token + "'");
    return v;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    fail(doc, e, "not a number: '" + token + "'");
  }
}

long long parse_integer(const KeyValueDoc& doc, const Entry& e, const std::string& token) {
  long long v = 0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (res.ec != std::errc{} || res.ptr != token.data() + token.size())
    fail(doc, e, "not an integer: '" + token + "'");
  return v;
}

std::uint64_t parse_u64(const KeyValueDoc& doc, const Entry& e, const std::string& token) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (res.ec != std::errc{} || res.ptr != token.data() + token.size())
    fail(doc, e, "not an unsigned integer: '" + token + "'");
  return v;
}

bool parse_bool(const KeyValueDoc& doc, const Entry& e) {
  if (e.value == "true" || e.value == "1") return true;
  if (e.value == "false" || e.value == "0") return false;
  fail(doc, e, "expected true/false");
}

Vec parse_vec(const KeyValueDoc& doc, const Entry& e) {
  const auto toks = tokens(e.value);
  if (toks.empty()) fail(doc, e, "expected at least one number");
  Vec v(static_cast<Eigen::Index>(toks.size()));
  for (std::size_t i = 0; i < toks.size(); ++i)
    v[static_cast<Eigen::Index>(i)] = parse_real(doc, e, toks[i]);
  return v;
}

/// Mixture at `prefix` ("": standalone file; "source." / "target.": inline).
std::optional<GaussianMixture> parse_mixture(KeyValueDoc& doc, const std::string& prefix) {
  const Entry* weights_entry = doc.take(prefix + "weights");
  if (!weights_entry) return std::nullopt;
  const Vec weights = parse_vec(doc, *weights_entry);
  const int k = static_cast<int>(weights.size());

  std::vector<Vec> means;
  std::vector<Mat> covs;
  for (int i = 0; i < k; ++i) {
    const Entry* mean_entry = doc.take(prefix + "mean." + std::to_string(i));
    if (!mean_entry) fail(doc, *weights_entry, "missing key '" + prefix + "mean." + std::to_string(i) + "'");
    means.push_back(parse_vec(doc, *mean_entry));
  }
  const auto d = means[0].size();
  for (int i = 0; i < k; ++i) {
    const Entry* cov_entry = doc.take(prefix + "cov." + std::to_string(i));
    if (!cov_entry) fail(doc, *weights_entry, "missing key '" + prefix + "cov." + std::to_string(i) + "'");
    const Vec flat = parse_vec(doc, *cov_entry);
    if (flat.size() != d * d)
      fail(doc, *cov_entry, "covariance needs " + std::to_string(d * d) + " row-major entries");
    Mat c(d, d);
    for (Eigen::Index r = 0; r < d; ++r)
      for (Eigen::Index cc = 0; cc < d; ++cc) c(r, cc) = flat[r * d + cc];
    covs.push_back(std::move(c));
  }
  try {
    return GaussianMixture::create(weights, std::move(means), std::move(covs));
  } catch (const std::invalid_argument& err) {
    fail(doc, *weights_entry, std::string("invalid mixture: ") + err.what());
  }
}

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open config file: " + path);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

}  // namespace

GaussianMixture parse_mixture_text(const std::string& text, const std::string& origin) {
  KeyValueDoc doc = parse_document(text, origin);
  auto gmm = parse_mixture(doc, "");
  if (!gmm) throw ConfigError(origin + ": missing 'weights' entry");
  doc.reject_unused();
  return *gmm;
}

GaussianMixture load_mixture(const std::string& path) {
  return parse_mixture_text(read_file(path), path);
}

BenchSpec parse_config_text(const std::string& text, const std::string& origin) {
  KeyValueDoc doc = parse_document(text, origin);
  BenchSpec spec;

  if (const Entry* e = doc.take("name")) spec.name = e->value;
  if (const Entry* e = doc.take("task")) spec.task_preset = e->value;
  if (const Entry* e = doc.take("out")) spec.out_dir = e->value;

  spec.source = parse_mixture(doc, "source.");
  spec.target = parse_mixture(doc, "target.");
  if (spec.source.has_value() != spec.target.has_value()) {
    throw ConfigError(origin + ": inline mixtures need both source.* and target.* blocks");
  }
  if (const Entry* e = doc.take("pairing")) {
    for (const auto& tok : tokens(e->value))
      spec.pairing.push_back(static_cast<int>(parse_integer(doc, *e, tok)));
  }

  if (const Entry* e = doc.take("methods")) {
    spec.methods.clear();
    for (const auto& tok : tokens(e->value)) {
      const auto m = parse_method(tok);
      if (!m) fail(doc, *e, "unknown method '" + tok + "'");
      spec.methods.push_back(*m);
    }
    if (spec.methods.empty()) fail(doc, *e, "methods list is empty");
  }

  if (const Entry* e = doc.take("T"))
    spec.base.T = static_cast<int>(parse_integer(doc, *e, e->value));
  if (const Entry* e = doc.take("s_src")) spec.base.s_src = parse_real(doc, *e, e->value);
  if (const Entry* e = doc.take("s_tar")) spec.base.s_tar = parse_real(doc, *e, e->value);
  if (const Entry* e = doc.take("n_min"))
    spec.base.n_min = static_cast<int>(parse_integer(doc, *e, e->value));
  if (const Entry* e = doc.take("n_max"))
    spec.base.n_max = static_cast<int>(parse_integer(doc, *e, e->value));
  if (const Entry* e = doc.take("n_avg"))
    spec.base.n_avg = static_cast<int>(parse_integer(doc, *e, e->value));
  if (const Entry* e = doc.take("seed")) spec.base.seed = parse_u64(doc, *e, e->value);
  if (const Entry* e = doc.take("samples"))
    spec.samples = static_cast<int>(parse_integer(doc, *e, e->value));
  if (const Entry* e = doc.take("squared_factor")) spec.base.squared_factor = parse_bool(doc, *e);
  if (const Entry* e = doc.take("fixed_anchor")) spec.base.fixed_anchor = parse_bool(doc, *e);
  if (const Entry* e = doc.take("record_timing")) spec.record_timing = parse_bool(doc, *e);

  if (const Entry* e = doc.take("sweep")) {
    for (const auto& tok : tokens(e->value)) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos)
        fail(doc, *e, "sweep points use the form n_max:s_tar, got '" + tok + "'");
      GridPoint p;
      p.n_max = static_cast<int>(parse_integer(doc, *e, tok.substr(0, colon)));
      p.s_tar = parse_real(doc, *e, tok.substr(colon + 1));
      spec.sweep.push_back(p);
    }
  }
  if (const Entry* e = doc.take("n_avg_list")) {
    for (const auto& tok : tokens(e->value))
      spec.n_avg_list.push_back(static_cast<int>(parse_integer(doc, *e, tok)));
  }

  doc.reject_unused();
  spec.validate();
  return spec;
}

BenchSpec load_config(const std::string& path) {
  BenchSpec spec = parse_config_text(read_file(path), path);
  // A task value that is not a known preset names a task file (source.*,
  // target.*, pairing) resolved relative to the config location.
  if (!spec.source && spec.task_preset != "paired-two-mode") {
    std::filesystem::path task_path(spec.task_preset);
    if (task_path.is_relative())
      task_path = std::filesystem::path(path).parent_path() / task_path;
    KeyValueDoc doc = parse_document(read_file(task_path.string()), task_path.string());
    spec.source = parse_mixture(doc, "source.");
    spec.target = parse_mixture(doc, "target.");
    if (!spec.source || !spec.target)
      throw ConfigError(task_path.string() + ": task file needs source.* and target.* mixtures");
    if (const Entry* e = doc.take("pairing")) {
      spec.pairing.clear();
      for (const auto& tok : tokens(e->value))
        spec.pairing.push_back(static_cast<int>(parse_integer(doc, *e, tok)));
    }
    doc.reject_unused();
    spec.validate();
  }
  return spec;
}

EditTask BenchSpec::resolve_task() const {
  if (source && target) return EditTask::create(*source, *target, pairing);
  if (task_preset == "paired-two-mode") return paired_two_mode();
  throw ConfigError("unknown task preset '" + task_preset + "'");
}

std::vector<GridPoint> BenchSpec::resolved_sweep() const {
  if (!sweep.empty()) return sweep;
  return {GridPoint{base.n_max, base.s_tar}};
}

std::vector<int> BenchSpec::resolved_n_avg() const {
  if (!n_avg_list.empty()) return n_avg_list;
  return {base.n_avg};
}

void BenchSpec::validate() const {
  if (samples < 1) throw ConfigError("invariant violation at key 'samples': must be >= 1");
  if (base.T < 1) throw ConfigError("invariant violation at key 'T': must be >= 1");
  if (base.n_min < 1)
    throw ConfigError("invariant violation at key 'n_min': must be >= 1");
  if (base.s_src < 0.0)
    throw ConfigError("invariant violation at key 's_src': must be >= 0");
  for (const GridPoint& p : resolved_sweep()) {
    if (p.n_max > base.T || p.n_max < base.n_min)
      throw ConfigError("invariant violation at key 'n_max': need n_min <= n_max <= T, got n_max=" +
                        std::to_string(p.n_max) + " with T=" + std::to_string(base.T));
    if (p.s_tar < 0.0) throw ConfigError("invariant violation at key 's_tar': must be >= 0");
  }
  for (int n : resolved_n_avg())
    if (n < 1) throw ConfigError("invariant violation at key 'n_avg': must be >= 1");
  if (!pairing.empty() && source) {
    // full permutation check happens in EditTask::create
    if (static_cast<int>(pairing.size()) != source->components())
      throw ConfigError("invariant violation at key 'pairing': size must match component count");
  }
  if (methods.empty()) throw ConfigError("invariant violation at key 'methods': empty");
}

namespace {

void emit_mixture(std::ostringstream& os, const std::string& prefix, const GaussianMixture& gmm) {
  os << prefix << "weights =";
  for (Eigen::Index i = 0; i < gmm.weights.size(); ++i)
    os << ' ' << csv::format_real(gmm.weights[i]);
  os << '\n';
  for (int k = 0; k < gmm.components(); ++k) {
    os << prefix << "mean." << k << " =";
    const Vec& m = gmm.means[static_cast<std::size_t>(k)];
    for (Eigen::Index i = 0; i < m.size(); ++i) os << ' ' << csv::format_real(m[i]);
    os << '\n';
  }
  for (int k = 0; k < gmm.components(); ++k) {
    os << prefix << "cov." << k << " =";
    const Mat& c = gmm.covs[static_cast<std::size_t>(k)];
    for (Eigen::Index r = 0; r < c.rows(); ++r)
      for (Eigen::Index cc = 0; cc < c.cols(); ++cc) os << ' ' << csv::format_real(c(r, cc));
    os << '\n';
  }
}

}  // namespace

std::string snapshot_config(const BenchSpec& spec) {
  std::ostringstream os;
  os << "# resolved benchmark config; reproduces results.csv bit-exactly\n";
  os << "name = " << spec.name << '\n';
  const EditTask task = spec.resolve_task();
  emit_mixture(os, "source.", task.source);
  emit_mixture(os, "target.", task.target);
  os << "pairing =";
  for (int p : task.pairing) os << ' ' << p;
  os << '\n';
  os << "methods =";
  for (Method m : spec.methods) os << ' ' << method_name(m);
  os << '\n';
  os << "T = " << spec.base.T << '\n';
  os << "s_src = " << csv::format_real(spec.base.s_src) << '\n';
  os << "s_tar = " << csv::format_real(spec.base.s_tar) << '\n';
  os << "n_min = " << spec.base.n_min << '\n';
  os << "n_max = " << spec.base.n_max << '\n';
  os << "n_avg = " << spec.base.n_avg << '\n';
  os << "seed = " << csv::format_u64(spec.base.seed) << '\n';
  os << "samples = " << spec.samples << '\n';
  os << "squared_factor = " << (spec.base.squared_factor ? "true" : "false") << '\n';
  os << "fixed_anchor = " << (spec.base.fixed_anchor ? "true" : "false") << '\n';
  os << "record_timing = " << (spec.record_timing ? "true" : "false") << '\n';
  os << "sweep =";
  for (const GridPoint& p : spec.resolved_sweep())
    os << ' ' << p.n_max << ':' << csv::format_real(p.s_tar);
  os << '\n';
  os << "n_avg_list =";
  for (int n : spec.resolved_n_avg()) os << ' ' << n;
  os << '\n';
  os << "out = " << spec.out_dir << '\n';
  return os.str();
}

}  // namespace af
