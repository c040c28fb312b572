#include "linkreg/scenario_io.hpp"

#include "linkreg/errors.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace linkreg {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

}  // namespace

KeyValueDocument KeyValueDocument::parse(std::istream& in, std::string source) {
  KeyValueDocument doc;
  doc.source_ = std::move(source);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string_view text = raw;
    if (const auto hash = text.find('#'); hash != std::string_view::npos) {
      text = text.substr(0, hash);
    }
    text = trim(text);
    if (text.empty()) {
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(doc.source_ + ":" + std::to_string(line) + ": expected 'key = value'");
    }
    KeyValueEntry e{std::string(trim(text.substr(0, eq))), std::string(trim(text.substr(eq + 1))),
                    line};
    if (e.key.empty()) {
      throw ConfigError(doc.source_ + ":" + std::to_string(line) + ": empty key");
    }
    doc.entries_.push_back(std::move(e));
  }
  return doc;
}

KeyValueDocument KeyValueDocument::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open config file " + path.string());
  }
  return parse(in, path.string());
}

std::optional<KeyValueEntry> KeyValueDocument::get(std::string_view key) const {
  std::optional<KeyValueEntry> found;
  for (const auto& e : entries_) {
    if (e.key == key) {
      if (found) {
        fail(e, "key '" + std::string(key) + "' repeated (first on line " +
                    std::to_string(found->line) + ")");
      }
      found = e;
    }
  }
  return found;
}

const KeyValueEntry& KeyValueDocument::require(std::string_view key) const {
  (void)get(key);  // rejects repeats
  for (const auto& e : entries_) {
    if (e.key == key) {
      return e;
    }
  }
  throw ConfigError(source_ + ": missing required key '" + std::string(key) + "'");
}

std::vector<KeyValueEntry> KeyValueDocument::get_all(std::string_view key) const {
  std::vector<KeyValueEntry> out;
  for (const auto& e : entries_) {
    if (e.key == key) {
      out.push_back(e);
    }
  }
  return out;
}

void KeyValueDocument::reject_unknown(const std::set<std::string, std::less<>>& known) const {
  for (const auto& e : entries_) {
    if (!known.contains(e.key)) {
      fail(e, "unknown key '" + e.key + "'");
    }
  }
}

void KeyValueDocument::fail(const KeyValueEntry& e, std::string_view what) const {
  throw ConfigError(source_ + ":" + std::to_string(e.line) + ": " + std::string(what));
}

double parse_double(std::string_view text) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') {
    text.remove_prefix(1);
  }
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw ConfigError("not a number: '" + std::string(text) + "'");
  }
  return v;
}

std::uint64_t parse_uint(std::string_view text) {
  text = trim(text);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw ConfigError("not a nonnegative integer: '" + std::string(text) + "'");
  }
  return v;
}

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto piece = trim(text.substr(start, comma == std::string_view::npos
                                                   ? std::string_view::npos
                                                   : comma - start));
    out.emplace_back(piece);
    if (comma == std::string_view::npos) {
      break;
    }
    start = comma + 1;
  }
  return out;
}

std::vector<double> parse_double_list(std::string_view text) {
  std::vector<double> out;
  for (const auto& s : split_list(text)) {
    out.push_back(parse_double(s));
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

const std::set<std::string, std::less<>>& scenario_keys() {
  static const std::set<std::string, std::less<>> keys{
      "n",       "seed",          "beta_true",         "level",       "match_model",
      "lambda",  "level_lambda",  "mismatch_response", "level_q",     "review_probability"};
  return keys;
}

ScenarioConfig parse_scenario(const KeyValueDocument& doc,
                              std::optional<std::uint64_t> default_seed) {
  // Wrap value errors with the offending line.
  auto with_line = [&doc](const KeyValueEntry& e, auto&& fn) {
    try {
      return fn(e.value);
    } catch (const ConfigError& err) {
      doc.fail(e, err.what());
    } catch (const DimensionError& err) {
      doc.fail(e, err.what());
    }
  };

  ScenarioConfig c;
  c.n = with_line(doc.require("n"), [](const std::string& v) { return parse_uint(v); });
  if (default_seed && !doc.get("seed")) {
    c.seed = *default_seed;
  } else {
    c.seed = with_line(doc.require("seed"), [](const std::string& v) { return parse_uint(v); });
  }
  c.beta_true = with_line(doc.require("beta_true"), [](const std::string& v) {
    const auto b = parse_double_list(v);
    return Coefficients(Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size())));
  });
  const auto p = static_cast<std::size_t>(c.beta_true.size());

  const auto levels = doc.get_all("level");
  if (levels.empty()) {
    throw ConfigError(doc.source() + ": at least one 'level = x1, ..., xp, weight' row is required");
  }
  for (const auto& e : levels) {
    c.covariate_levels.push_back(with_line(e, [p](const std::string& v) {
      const auto row = parse_double_list(v);
      if (row.size() != p + 1) {
        throw ConfigError("level row needs " + std::to_string(p) +
                          " covariates followed by a weight");
      }
      Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(row.data(), static_cast<Eigen::Index>(p));
      return CovariateLevel{Covariates(std::move(x)), row.back()};
    }));
  }

  const std::string match = doc.get("match_model") ? doc.get("match_model")->value : "constant";
  if (match == "constant") {
    c.match_model = ConstantMatch{with_line(doc.require("lambda"), [](const std::string& v) {
      return parse_double(v);
    })};
  } else if (match == "cell") {
    c.match_model = CellMatch{with_line(doc.require("level_lambda"), [](const std::string& v) {
      return parse_double_list(v);
    })};
  } else {
    doc.fail(*doc.get("match_model"), "match_model must be 'constant' or 'cell'");
  }

  const std::string mismatch =
      doc.get("mismatch_response") ? doc.get("mismatch_response")->value : "population-marginal";
  if (mismatch == "population-marginal") {
    c.mismatch_model = PopulationMarginal{};
  } else if (mismatch == "per-level") {
    c.mismatch_model = PerLevelRate{with_line(doc.require("level_q"), [](const std::string& v) {
      return parse_double_list(v);
    })};
  } else {
    doc.fail(*doc.get("mismatch_response"),
             "mismatch_response must be 'population-marginal' or 'per-level'");
  }

  c.review_probability = with_line(doc.require("review_probability"),
                                   [](const std::string& v) { return parse_double(v); });
  try {
    c.validate();
  } catch (const ConfigError& err) {
    throw ConfigError(doc.source() + ": " + err.what());
  }
  return c;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  const auto doc = KeyValueDocument::load(path);
  doc.reject_unknown(scenario_keys());
  return parse_scenario(doc);
}

void write_scenario(std::ostream& os, const ScenarioConfig& c) {
  auto join = [](const auto& values) {
    std::string s;
    for (std::size_t k = 0; k < values.size(); ++k) {
      s += (k ? ", " : "") + format_double(values[k]);
    }
    return s;
  };
  std::vector<double> beta(c.beta_true.values().data(),
                           c.beta_true.values().data() + c.beta_true.size());
  os << "n = " << c.n << "\nseed = " << c.seed << "\nbeta_true = " << join(beta) << '\n';
  for (const auto& lvl : c.covariate_levels) {
    std::vector<double> row(lvl.x.values().data(), lvl.x.values().data() + lvl.x.size());
    row.push_back(lvl.weight);
    os << "level = " << join(row) << '\n';
  }
  std::visit(overloaded{
                 [&](const ConstantMatch& m) {
                   os << "match_model = constant\nlambda = " << format_double(m.lambda) << '\n';
                 },
                 [&](const CellMatch& m) {
                   os << "match_model = cell\nlevel_lambda = " << join(m.lambda) << '\n';
                 },
             },
             c.match_model);
  std::visit(overloaded{
                 [&](const PopulationMarginal&) {
                   os << "mismatch_response = population-marginal\n";
                 },
                 [&](const PerLevelRate& m) {
                   os << "mismatch_response = per-level\nlevel_q = " << join(m.q) << '\n';
                 },
             },
             c.mismatch_model);
  os << "review_probability = " << format_double(c.review_probability) << '\n';
}

void write_dataset_csv(std::ostream& os, const LinkedDataset& ds) {
  const auto p = ds.dim();
  for (Eigen::Index k = 0; k < p; ++k) {
    os << 'x' << (k + 1) << ',';
  }
  os << "y_star,r,d,y_latent\n";
  std::string line;
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    line.clear();
    for (Eigen::Index k = 0; k < p; ++k) {
      line += format_double(ds.design()(i, k));
      line += ',';
    }
    line += static_cast<char>('0' + ds.y_star(i));
    line += ',';
    line += static_cast<char>('0' + ds.r(i));
    line += ',';
    if (const auto d = ds.d(i)) {
      line += static_cast<char>('0' + *d);
    }
    line += ',';
    if (const auto y = ds.y_latent(i)) {
      line += static_cast<char>('0' + *y);
    }
    line += '\n';
    os << line;
  }
}

LinkedDataset read_dataset_csv(std::istream& in, const std::string& source) {
  auto fail = [&source](int line, const std::string& what) -> ConfigError {
    return ConfigError(source + ":" + std::to_string(line) + ": " + what);
  };
  std::string raw;
  if (!std::getline(in, raw)) {
    throw fail(1, "empty dataset file");
  }
  auto header = split_list(trim(raw));
  if (header.size() < 5) {
    throw fail(1, "header must be x1,...,xp,y_star,r,d,y_latent");
  }
  const std::size_t p = header.size() - 4;
  for (std::size_t k = 0; k < p; ++k) {
    if (header[k] != "x" + std::to_string(k + 1)) {
      throw fail(1, "expected column x" + std::to_string(k + 1) + ", found '" + header[k] + "'");
    }
  }
  if (header[p] != "y_star" || header[p + 1] != "r" || header[p + 2] != "d" ||
      header[p + 3] != "y_latent") {
    throw fail(1, "header must end with y_star,r,d,y_latent");
  }

  std::vector<double> xs;
  std::vector<std::int8_t> ys, r, d, yl;
  auto binary = [&](const std::string& field, bool optional, int line,
                    const char* name) -> std::int8_t {
    if (field.empty()) {
      if (optional) {
        return -1;
      }
      throw fail(line, std::string(name) + " is required");
    }
    if (field == "0") return 0;
    if (field == "1") return 1;
    throw fail(line, std::string(name) + " must be 0 or 1, found '" + field + "'");
  };

  int line = 1;
  while (std::getline(in, raw)) {
    ++line;
    if (trim(raw).empty()) {
      continue;
    }
    const auto fields = split_list(trim(raw));
    if (fields.size() != p + 4) {
      throw fail(line, "expected " + std::to_string(p + 4) + " fields, found " +
                           std::to_string(fields.size()));
    }
    for (std::size_t k = 0; k < p; ++k) {
      try {
        xs.push_back(parse_double(fields[k]));
      } catch (const ConfigError& e) {
        throw fail(line, e.what());
      }
    }
    if (xs[xs.size() - p] != 1.0) {
      throw fail(line, "x1 must be 1 (intercept column)");
    }
    ys.push_back(binary(fields[p], false, line, "y_star"));
    r.push_back(binary(fields[p + 1], false, line, "r"));
    d.push_back(binary(fields[p + 2], true, line, "d"));
    yl.push_back(binary(fields[p + 3], true, line, "y_latent"));
  }
  if (ys.empty()) {
    throw fail(line, "dataset has no records");
  }
  RowMatrix design = Eigen::Map<const RowMatrix>(xs.data(), static_cast<Eigen::Index>(ys.size()),
                                                 static_cast<Eigen::Index>(p));
  try {
    return LinkedDataset(std::move(design), std::move(ys), std::move(r), std::move(d),
                         std::move(yl));
  } catch (const DataIntegrityError& e) {
    throw DataIntegrityError(source + ": " + e.what());
  }
}

void save_dataset_csv(const std::filesystem::path& path, const LinkedDataset& ds) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open " + path.string() + " for writing");
  }
  write_dataset_csv(out, ds);
  if (!out) {
    throw IoError("failed writing " + path.string());
  }
}

LinkedDataset load_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open dataset " + path.string());
  }
  return read_dataset_csv(in, path.string());
}

}  // namespace linkreg
