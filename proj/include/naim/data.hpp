#pragma once

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "naim/common.hpp"

namespace naim {

enum class FeatureKind { Numerical, Categorical };

struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::Numerical;
};

struct LabelSpec {
  std::string name;          // empty -> label is the last CSV column
  std::vector<std::string> classes;
};

// Declares column names/kinds and the label coding. Category coding is data
// dependent and lives in Preprocessor, fitted on the training split.
struct FeatureSchema {
  std::vector<FeatureSpec> features;
  LabelSpec label;

  std::size_t feature_count() const { return features.size(); }
  std::size_t class_count() const { return label.classes.size(); }

  static FeatureSchema from_json(const nlohmann::json& j) {
    FeatureSchema s;
    if (!j.contains("features") || !j["features"].is_array() || j["features"].empty())
      throw DataError("schema: 'features' must be a non-empty array");
    for (const auto& f : j["features"]) {
      FeatureSpec fs;
      fs.name = f.at("name").get<std::string>();
      const std::string kind = f.at("kind").get<std::string>();
      if (kind == "numerical") fs.kind = FeatureKind::Numerical;
      else if (kind == "categorical") fs.kind = FeatureKind::Categorical;
      else throw DataError("schema: feature '" + fs.name + "' has unknown kind '" + kind + "'");
      s.features.push_back(std::move(fs));
    }
    const auto& lab = j.at("label");
    if (lab.contains("name")) s.label.name = lab["name"].get<std::string>();
    for (const auto& c : lab.at("classes")) s.label.classes.push_back(c.get<std::string>());
    if (s.label.classes.size() < 2) throw DataError("schema: label needs >= 2 classes");
    for (std::size_t i = 0; i < s.features.size(); ++i)
      for (std::size_t k = i + 1; k < s.features.size(); ++k)
        if (s.features[i].name == s.features[k].name)
          throw DataError("schema: duplicate feature name '" + s.features[i].name + "'");
    return s;
  }

  static FeatureSchema from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("schema: cannot open '" + path + "'");
    nlohmann::json j;
    try {
      in >> j;
    } catch (const std::exception& e) {
      throw DataError("schema: invalid JSON in '" + path + "': " + e.what());
    }
    return from_json(j);
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["features"] = nlohmann::json::array();
    for (const FeatureSpec& f : features)
      j["features"].push_back({{"name", f.name}, {"kind", f.kind == FeatureKind::Numerical ? "numerical" : "categorical"}});
    j["label"] = {{"name", label.name}, {"classes", label.classes}};
    return j;
  }
};

// Samples x features value/presence grids. `encoded=false` right after CSV
// loading (categorical cells are raw strings); `encoded=true` after
// apply_preprocessor (numericals normalized, categoricals hold codes).
// Cells with present=false carry no meaning and are never read by consumers.
struct TabularDataset {
  FeatureSchema schema;
  bool encoded = false;
  std::size_t n = 0;                       // samples
  std::vector<double> values;              // n x F: numeric value or category code
  std::vector<std::uint8_t> present;       // n x F
  std::vector<std::string> raw;            // n x F, raw categorical labels (empty when encoded)
  std::vector<int> labels;                 // n

  std::size_t feature_count() const { return schema.feature_count(); }
  std::size_t idx(std::size_t r, std::size_t f) const { return r * feature_count() + f; }

  double value_at(std::size_t r, std::size_t f) const { return values[idx(r, f)]; }
  bool present_at(std::size_t r, std::size_t f) const { return present[idx(r, f)] != 0; }

  std::size_t missing_count() const {
    std::size_t c = 0;
    for (std::uint8_t p : present) c += (p == 0);
    return c;
  }

  TabularDataset subset(const std::vector<int>& rows) const {
    TabularDataset out;
    out.schema = schema;
    out.encoded = encoded;
    out.n = rows.size();
    const std::size_t F = feature_count();
    out.values.reserve(out.n * F);
    out.present.reserve(out.n * F);
    if (!raw.empty()) out.raw.reserve(out.n * F);
    out.labels.reserve(out.n);
    for (int r : rows) {
      if (r < 0 || static_cast<std::size_t>(r) >= n) throw Error("subset: row index out of range");
      for (std::size_t f = 0; f < F; ++f) {
        out.values.push_back(values[idx(static_cast<std::size_t>(r), f)]);
        out.present.push_back(present[idx(static_cast<std::size_t>(r), f)]);
        if (!raw.empty()) out.raw.push_back(raw[idx(static_cast<std::size_t>(r), f)]);
      }
      out.labels.push_back(labels[static_cast<std::size_t>(r)]);
    }
    return out;
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline bool is_missing_token(std::string_view s) { return s.empty() || s == "NA" || s == "?"; }

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

inline std::optional<double> parse_double(std::string_view s) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || p != e) return std::nullopt;
  return v;
}

}  // namespace detail

// UTF-8 comma-separated file with one header row. Every schema feature must
// appear in the header; the label column is matched by name when the schema
// names one, otherwise it is the last column. Cells are trimmed; "", "NA" and
// "?" mean missing. Categorical cells stay raw until preprocessing.
inline TabularDataset load_csv(const std::string& path, const FeatureSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("load_csv: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw DataError("load_csv: '" + path + "' is empty (no header)");
  const std::vector<std::string> header = detail::split_csv_line(line);

  const std::size_t F = schema.feature_count();
  std::vector<int> col_of_feature(F, -1);
  int label_col = -1;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string name(detail::trim(header[c]));
    bool known = false;
    for (std::size_t f = 0; f < F; ++f)
      if (schema.features[f].name == name) {
        if (col_of_feature[f] != -1) throw DataError("load_csv: duplicate column '" + name + "'");
        col_of_feature[f] = static_cast<int>(c);
        known = true;
      }
    if (!known) {
      if (!schema.label.name.empty() && name == schema.label.name) {
        label_col = static_cast<int>(c);
      } else if (schema.label.name.empty() && c == header.size() - 1) {
        label_col = static_cast<int>(c);
      } else {
        throw DataError("load_csv: unknown header column '" + name + "'");
      }
    }
  }
  for (std::size_t f = 0; f < F; ++f)
    if (col_of_feature[f] == -1)
      throw DataError("load_csv: schema feature '" + schema.features[f].name + "' not in header");
  if (label_col == -1) throw DataError("load_csv: label column not found");

  TabularDataset d;
  d.schema = schema;
  d.encoded = false;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const std::vector<std::string> cells = detail::split_csv_line(line);
    if (cells.size() != header.size())
      throw DataError("load_csv: line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                      " cells, expected " + std::to_string(header.size()));
    for (std::size_t f = 0; f < F; ++f) {
      const std::string cell(detail::trim(cells[static_cast<std::size_t>(col_of_feature[f])]));
      if (detail::is_missing_token(cell)) {
        d.values.push_back(0.0);
        d.present.push_back(0);
        d.raw.emplace_back();
        continue;
      }
      if (schema.features[f].kind == FeatureKind::Numerical) {
        const std::optional<double> v = detail::parse_double(cell);
        if (!v)
          throw DataError("load_csv: line " + std::to_string(line_no) + ", column '" +
                          schema.features[f].name + "': cannot parse '" + cell + "' as a number");
        d.values.push_back(*v);
        d.present.push_back(1);
        d.raw.emplace_back();
      } else {
        d.values.push_back(0.0);
        d.present.push_back(1);
        d.raw.push_back(cell);
      }
    }
    const std::string lab(detail::trim(cells[static_cast<std::size_t>(label_col)]));
    if (detail::is_missing_token(lab))
      throw DataError("load_csv: line " + std::to_string(line_no) + ": missing label");
    const auto it = std::find(schema.label.classes.begin(), schema.label.classes.end(), lab);
    if (it == schema.label.classes.end())
      throw DataError("load_csv: line " + std::to_string(line_no) + ": label '" + lab +
                      "' is not a declared class");
    d.labels.push_back(static_cast<int>(it - schema.label.classes.begin()));
    d.n += 1;
  }
  return d;
}

// Fitted on the training split only. Category codes are assigned in
// lexicographic label order; the padding index for feature i is k_i.
struct Preprocessor {
  struct NumStat {
    double lo = 0.0, hi = 1.0;
    bool degenerate = true;  // no observed values, or constant column
  };
  FeatureSchema schema;
  std::vector<NumStat> num;                        // per feature; unused for categoricals
  std::vector<std::vector<std::string>> cats;      // per feature; sorted labels, code = index

  std::size_t cardinality(std::size_t f) const { return cats[f].size(); }

  static Preprocessor fit(const TabularDataset& train) {
    if (train.encoded) throw DataError("Preprocessor::fit: expects a raw (unencoded) dataset");
    Preprocessor p;
    p.schema = train.schema;
    const std::size_t F = train.feature_count();
    p.num.resize(F);
    p.cats.resize(F);
    for (std::size_t f = 0; f < F; ++f) {
      if (train.schema.features[f].kind == FeatureKind::Numerical) {
        double lo = 0.0, hi = 0.0;
        bool seen = false;
        for (std::size_t r = 0; r < train.n; ++r) {
          if (!train.present_at(r, f)) continue;
          const double v = train.value_at(r, f);
          if (!seen) {
            lo = hi = v;
            seen = true;
          } else {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
          }
        }
        p.num[f] = NumStat{lo, hi, !seen || lo == hi};
      } else {
        std::vector<std::string> labels;
        for (std::size_t r = 0; r < train.n; ++r)
          if (train.present_at(r, f)) labels.push_back(train.raw[train.idx(r, f)]);
        std::sort(labels.begin(), labels.end());
        labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
        p.cats[f] = std::move(labels);
      }
    }
    return p;
  }

  // Numericals -> (x-lo)/(hi-lo) clamped to [0,1] (degenerate range -> 0.5);
  // categoricals -> code; unseen labels become missing.
  TabularDataset apply(const TabularDataset& d) const {
    if (d.encoded) throw DataError("Preprocessor::apply: dataset already encoded");
    if (d.schema.features.size() != schema.features.size())
      throw DataError("Preprocessor::apply: schema mismatch");
    TabularDataset out;
    out.schema = d.schema;
    out.encoded = true;
    out.n = d.n;
    out.labels = d.labels;
    const std::size_t F = d.feature_count();
    out.values.assign(d.n * F, 0.0);
    out.present.assign(d.n * F, 0);
    for (std::size_t r = 0; r < d.n; ++r) {
      for (std::size_t f = 0; f < F; ++f) {
        if (!d.present_at(r, f)) continue;
        if (schema.features[f].kind == FeatureKind::Numerical) {
          const NumStat& s = num[f];
          double v = s.degenerate ? 0.5 : (d.value_at(r, f) - s.lo) / (s.hi - s.lo);
          v = std::clamp(v, 0.0, 1.0);
          out.values[out.idx(r, f)] = v;
          out.present[out.idx(r, f)] = 1;
        } else {
          const std::vector<std::string>& table = cats[f];
          const std::string& lab = d.raw[d.idx(r, f)];
          const auto it = std::lower_bound(table.begin(), table.end(), lab);
          if (it == table.end() || *it != lab) continue;  // unseen -> missing
          out.values[out.idx(r, f)] = static_cast<double>(it - table.begin());
          out.present[out.idx(r, f)] = 1;
        }
      }
    }
    return out;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["num"] = nlohmann::json::array();
    j["cats"] = nlohmann::json::array();
    for (const NumStat& s : num) j["num"].push_back({{"lo", s.lo}, {"hi", s.hi}, {"degenerate", s.degenerate}});
    for (const auto& c : cats) j["cats"].push_back(c);
    return j;
  }

  static Preprocessor from_json(const nlohmann::json& j, const FeatureSchema& schema) {
    Preprocessor p;
    p.schema = schema;
    for (const auto& s : j.at("num"))
      p.num.push_back(NumStat{s.at("lo").get<double>(), s.at("hi").get<double>(), s.at("degenerate").get<bool>()});
    for (const auto& c : j.at("cats")) p.cats.push_back(c.get<std::vector<std::string>>());
    if (p.num.size() != schema.feature_count() || p.cats.size() != schema.feature_count())
      throw DataError("Preprocessor::from_json: feature count mismatch");
    return p;
  }
};

}  // namespace naim
