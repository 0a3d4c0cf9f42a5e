#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fpp/date.hpp"
#include "fpp/error.hpp"
#include "fpp/grid.hpp"

namespace fpp {

enum class Partition { Train, Validation, Test };

inline const char* to_string(Partition p) {
  switch (p) {
    case Partition::Train: return "train";
    case Partition::Validation: return "val";
    case Partition::Test: return "test";
  }
  return "?";
}

inline Partition parse_partition(const std::string& s) {
  if (s == "train") return Partition::Train;
  if (s == "val" || s == "validation") return Partition::Validation;
  if (s == "test") return Partition::Test;
  throw Error(ErrorKind::Config, "unknown partition '" + s + "'");
}

struct DateRange {
  Date first, last;  // inclusive
  bool contains(Date d) const { return first <= d && d <= last; }
};

/// Year-based train/validation/test split. When date ranges are given they
/// take precedence over the year lists (used for desk-scale synthetic runs).
/// Membership is decided by a sample's target date.
struct SplitSpec {
  std::vector<int> training_years;
  std::vector<int> validation_years;
  std::vector<int> test_years;
  std::vector<DateRange> training_ranges, validation_ranges, test_ranges;

  bool uses_ranges() const { return !training_ranges.empty() || !validation_ranges.empty() || !test_ranges.empty(); }

  std::optional<Partition> partition_of(Date target) const {
    if (uses_ranges()) {
      auto in = [&](const std::vector<DateRange>& rs) {
        return std::any_of(rs.begin(), rs.end(), [&](const DateRange& r) { return r.contains(target); });
      };
      if (in(training_ranges)) return Partition::Train;
      if (in(validation_ranges)) return Partition::Validation;
      if (in(test_ranges)) return Partition::Test;
      return std::nullopt;
    }
    const int y = target.year();
    auto has = [y](const std::vector<int>& v) { return std::find(v.begin(), v.end(), y) != v.end(); };
    if (has(training_years)) return Partition::Train;
    if (has(validation_years)) return Partition::Validation;
    if (has(test_years)) return Partition::Test;
    return std::nullopt;
  }

  void validate() const {
    std::set<int> seen;
    for (const auto* v : {&training_years, &validation_years, &test_years}) {
      for (const int y : *v) {
        if (!seen.insert(y).second) throw Error(ErrorKind::Config, "split year " + std::to_string(y) + " assigned twice");
      }
    }
    std::vector<DateRange> all;
    for (const auto* v : {&training_ranges, &validation_ranges, &test_ranges}) all.insert(all.end(), v->begin(), v->end());
    for (std::size_t a = 0; a < all.size(); ++a) {
      if (all[a].last < all[a].first) throw Error(ErrorKind::Config, "split date range ends before it starts");
      for (std::size_t b = a + 1; b < all.size(); ++b) {
        if (all[a].first <= all[b].last && all[b].first <= all[a].last) {
          throw Error(ErrorKind::Config, "split date ranges overlap");
        }
      }
    }
  }

  /// Identifier recorded in checkpoints and manifests.
  std::string id() const { return nlohmann::json(*this).dump(); }

  friend void to_json(nlohmann::json& j, const SplitSpec& s) {
    j = nlohmann::json::object();
    if (s.uses_ranges()) {
      auto ranges = [](const std::vector<DateRange>& rs) {
        auto a = nlohmann::json::array();
        for (const auto& r : rs) a.push_back({r.first.iso(), r.last.iso()});
        return a;
      };
      j["training_ranges"] = ranges(s.training_ranges);
      j["validation_ranges"] = ranges(s.validation_ranges);
      j["test_ranges"] = ranges(s.test_ranges);
    } else {
      j["training_years"] = s.training_years;
      j["validation_years"] = s.validation_years;
      j["test_years"] = s.test_years;
    }
  }

  friend void from_json(const nlohmann::json& j, SplitSpec& s) {
    s = SplitSpec{};
    auto ranges = [&](const char* key) {
      std::vector<DateRange> out;
      if (!j.contains(key)) return out;
      for (const auto& r : j.at(key)) {
        if (!r.is_array() || r.size() != 2) throw Error(ErrorKind::Config, std::string(key) + ": expected [first, last] pairs");
        out.push_back({Date::parse(r[0].get<std::string>()), Date::parse(r[1].get<std::string>())});
      }
      return out;
    };
    s.training_ranges = ranges("training_ranges");
    s.validation_ranges = ranges("validation_ranges");
    s.test_ranges = ranges("test_ranges");
    if (j.contains("training_years")) s.training_years = j.at("training_years").get<std::vector<int>>();
    if (j.contains("validation_years")) s.validation_years = j.at("validation_years").get<std::vector<int>>();
    if (j.contains("test_years")) s.test_years = j.at("test_years").get<std::vector<int>>();
    s.validate();
  }
};

inline const std::vector<int> kDefaultValidationYears{1997, 2002, 2007, 2012, 2017};
inline const std::vector<int> kDefaultTestYears{1998, 2003, 2008, 2013, 2018};

/// Years in `validation`/`test` present in `all_years` go to those sets and
/// every other year trains. Defaults reproduce the 29/5/5 split of 1980-2018.
inline SplitSpec split_years(const std::vector<int>& all_years,
                             const std::vector<int>& validation = kDefaultValidationYears,
                             const std::vector<int>& test = kDefaultTestYears) {
  SplitSpec s;
  std::vector<int> years = all_years;
  std::sort(years.begin(), years.end());
  years.erase(std::unique(years.begin(), years.end()), years.end());
  auto has = [](const std::vector<int>& v, int y) { return std::find(v.begin(), v.end(), y) != v.end(); };
  for (const int y : years) {
    if (has(validation, y) && has(test, y)) throw Error(ErrorKind::Config, "year " + std::to_string(y) + " in two splits");
    if (has(validation, y)) {
      s.validation_years.push_back(y);
    } else if (has(test, y)) {
      s.test_years.push_back(y);
    } else {
      s.training_years.push_back(y);
    }
  }
  return s;
}

inline std::vector<int> year_range(int first, int last) {
  std::vector<int> v;
  for (int y = first; y <= last; ++y) v.push_back(y);
  return v;
}

/// Input frame (12Z of input_date) paired with the 24-h accumulation ending
/// 12Z of target_date = input_date + lead.
struct SamplePair {
  std::size_t meteo_index;
  std::size_t precip_index;
  Date input_date;
  Date target_date;
};

struct PairingResult {
  std::vector<SamplePair> pairs;
  std::vector<Date> skipped;  // input dates with no target at input_date + lead
};

inline PairingResult pair_samples(const MeteoSeries& meteo, const PrecipSeries& precip, int lead) {
  if (lead < 1) throw Error(ErrorKind::Domain, "pair_samples: lead must be >= 1 day, got " + std::to_string(lead));
  std::map<Date, std::size_t> by_date;
  for (std::size_t k = 0; k < precip.size(); ++k) by_date.emplace(precip[k].date, k);
  PairingResult r;
  for (std::size_t k = 0; k < meteo.size(); ++k) {
    const Date target = meteo[k].date + lead;
    const auto it = by_date.find(target);
    if (it == by_date.end()) {
      r.skipped.push_back(meteo[k].date);
      continue;
    }
    r.pairs.push_back({k, it->second, meteo[k].date, target});
  }
  if (r.pairs.empty()) throw Error(ErrorKind::Domain, "pair_samples: no input/target pairs at lead " + std::to_string(lead));
  return r;
}

inline std::vector<SamplePair> select_partition(const std::vector<SamplePair>& pairs, const SplitSpec& split,
                                                Partition p) {
  std::vector<SamplePair> out;
  for (const auto& s : pairs) {
    if (split.partition_of(s.target_date) == p) out.push_back(s);
  }
  return out;
}

}  // namespace fpp
