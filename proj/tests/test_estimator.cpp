// Copyright 2026 The riomark Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "riomark/estimator.hpp"
#include "riomark/rng.hpp"
#include "support/fixtures.hpp"

using namespace riomark;
using riomark::testing::record;

TEST_CASE("effective marker maps 99 to 0 and keeps the rest") {
  CHECK(effective_marker(RioMarker{99}).value == 0);
  CHECK(effective_marker(RioMarker{2}).value == 2);
  CHECK(effective_marker(RioMarker{1}).value == 1);
  CHECK(effective_marker(RioMarker{0}).value == 0);
}

TEST_CASE("overreport flag truth table") {
  // the six admissible (reported, predicted) pairs
  CHECK(overreport_flag(RioMarker{1}, RioMarker{0}) == true);
  CHECK(overreport_flag(RioMarker{2}, RioMarker{0}) == true);
  CHECK(overreport_flag(RioMarker{2}, RioMarker{1}) == true);
  CHECK(overreport_flag(RioMarker{1}, RioMarker{1}) == false);
  CHECK(overreport_flag(RioMarker{2}, RioMarker{2}) == false);
  CHECK(overreport_flag(RioMarker{1}, RioMarker{2}) == false);
  // 99 counts as 0
  CHECK(overreport_flag(RioMarker{1}, RioMarker{99}) == true);
  CHECK(overreport_flag(RioMarker{2}, RioMarker{99}) == true);
}

TEST_CASE("flagging a record reported 0 is a contract violation") {
  CHECK_THROWS_AS(overreport_flag(RioMarker{0}, RioMarker{0}), Error);
}

TEST_CASE("stratified rates: single stratum, all overreported") {
  std::vector<ActivityRecord> records;
  std::vector<OverreportFlag> flags;
  for (int i = 0; i < 4; ++i) {
    records.push_back(record("r" + std::to_string(i), "Japan", 2012, "t", "d", 2));
    flags.push_back(make_flag("r" + std::to_string(i), RioMarker{2}, RioMarker{0}));
  }
  auto rates = stratified_rates(flags, records, GroupBy::none);
  REQUIRE(rates.size() == 1);
  CHECK(rates[0].rate == 1.0);
  CHECK(rates[0].n == 4);
  CHECK(!rates[0].donor.has_value());
  CHECK(!rates[0].year.has_value());
  CHECK(rates[0].low_n);  // 4 < 500
}

TEST_CASE("stratified rates: the 87-of-114 stratum reproduces 76.32%") {
  std::vector<ActivityRecord> records;
  std::vector<OverreportFlag> flags;
  for (int i = 0; i < 114; ++i) {
    records.push_back(record("fr" + std::to_string(i), "France", 2012, "t", "d", 2));
    flags.push_back(make_flag("fr" + std::to_string(i), RioMarker{2},
                              i < 87 ? RioMarker{1} : RioMarker{2}));
  }
  auto rates = stratified_rates(flags, records, GroupBy::donor_year);
  REQUIRE(rates.size() == 2);
  const RateSummary& stratum = rates[1];
  CHECK(stratum.donor.value() == "France");
  CHECK(stratum.year.value() == 2012);
  CHECK(stratum.n == 114);
  CHECK(stratum.n_overreported == 87);
  CHECK(stratum.rate == doctest::Approx(0.7632).epsilon(1e-3));
  CHECK(stratum.low_n);
}

TEST_CASE("empty strata are omitted; the overall stratum is always present") {
  std::vector<ActivityRecord> records = {record("a", "Japan", 2012, "t", "d", 1)};
  std::vector<OverreportFlag> flags = {make_flag("a", RioMarker{1}, RioMarker{1})};
  auto rates = stratified_rates(flags, records, GroupBy::year);
  REQUIRE(rates.size() == 2);  // overall + 2012; no empty year strata
  CHECK(!rates[0].year.has_value());
  CHECK(rates[1].year.value() == 2012);
}

TEST_CASE("rate properties over random data") {
  Rng rng(4242);
  auto records = riomark::testing::synthetic_crs(400, 10);
  std::vector<OverreportFlag> flags;
  for (const auto& r : records) {
    const int predicted[] = {0, 1, 2, 99};
    flags.push_back(
        make_flag(r.id, r.reported_marker, RioMarker{predicted[rng.bounded(4)]}));
  }

  auto donor_year = stratified_rates(flags, records, GroupBy::donor_year);
  const RateSummary overall = donor_year.front();

  SUBCASE("strata counts sum to the overall count") {
    std::size_t total = 0, over = 0;
    for (std::size_t i = 1; i < donor_year.size(); ++i) {
      total += donor_year[i].n;
      over += donor_year[i].n_overreported;
    }
    CHECK(total == overall.n);
    CHECK(over == overall.n_overreported);
  }

  SUBCASE("rates are invariant under record permutation") {
    std::vector<std::size_t> order(records.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng shuffle_rng(7);
    shuffle_rng.shuffle(order);
    std::vector<ActivityRecord> shuffled_records;
    std::vector<OverreportFlag> shuffled_flags;
    for (std::size_t i : order) {
      shuffled_records.push_back(records[i]);
      shuffled_flags.push_back(flags[i]);
    }
    auto shuffled = stratified_rates(shuffled_flags, shuffled_records, GroupBy::donor_year);
    REQUIRE(shuffled.size() == donor_year.size());
    for (std::size_t i = 0; i < shuffled.size(); ++i) {
      CHECK(shuffled[i].donor == donor_year[i].donor);
      CHECK(shuffled[i].year == donor_year[i].year);
      CHECK(shuffled[i].n == donor_year[i].n);
      CHECK(shuffled[i].rate == donor_year[i].rate);
    }
  }

  SUBCASE("predictions equal to reports give zero rates everywhere") {
    std::vector<OverreportFlag> agree;
    for (const auto& r : records) agree.push_back(make_flag(r.id, r.reported_marker, r.reported_marker));
    for (const auto& s : stratified_rates(agree, records, GroupBy::donor_year)) {
      CHECK(s.rate == 0.0);
    }
  }

  SUBCASE("constant-zero predictions give rate one everywhere") {
    std::vector<OverreportFlag> zero;
    for (const auto& r : records) zero.push_back(make_flag(r.id, r.reported_marker, RioMarker{0}));
    for (const auto& s : stratified_rates(zero, records, GroupBy::donor_year)) {
      CHECK(s.rate == 1.0);
    }
  }
}

TEST_CASE("low_n threshold annotates thin strata") {
  std::vector<ActivityRecord> records;
  std::vector<OverreportFlag> flags;
  for (int i = 0; i < 600; ++i) {
    records.push_back(record("g" + std::to_string(i), "Germany", 2015, "t", "d", 1));
    flags.push_back(make_flag("g" + std::to_string(i), RioMarker{1}, RioMarker{0}));
  }
  for (int i = 0; i < 10; ++i) {
    records.push_back(record("f" + std::to_string(i), "France", 2015, "t", "d", 1));
    flags.push_back(make_flag("f" + std::to_string(i), RioMarker{1}, RioMarker{0}));
  }
  auto rates = stratified_rates(flags, records, GroupBy::donor_year);
  for (const auto& s : rates) {
    if (!s.donor) continue;
    if (*s.donor == "Germany") CHECK(!s.low_n);
    if (*s.donor == "France") CHECK(s.low_n);
  }
}

TEST_CASE("underreport diagnostic counts predicted above reported") {
  std::vector<OverreportFlag> flags = {
      make_flag("a", RioMarker{1}, RioMarker{2}),   // under
      make_flag("b", RioMarker{2}, RioMarker{1}),   // over
      make_flag("c", RioMarker{1}, RioMarker{1}),   // agree
      make_flag("d", RioMarker{1}, RioMarker{99})}; // over (99 -> 0)
  CHECK(count_underreported(flags) == 1);
}
