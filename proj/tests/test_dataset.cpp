#include <doctest.h>

#include <cmath>
#include <sstream>

#include "fkm/dataset.hpp"
#include "fkm/rng.hpp"

using namespace fkm;

namespace {

SparseFunctionalDataset from_csv(const std::string& text, const CsvColumns& cols = {}) {
  std::istringstream in(text);
  return load_csv_stream(in, cols);
}

}  // namespace

TEST_CASE("load_csv groups rows by subject") {
  const auto ds = from_csv("id,time,value\na,0.1,1\na,0.5,2\na,0.3,3\n");
  CHECK(ds.n() == 1);
  CHECK(ds.subjects[0].size() == 3);
  // sorted by time
  CHECK(ds.subjects[0].times == std::vector<double>{0.1, 0.3, 0.5});
  CHECK(ds.subjects[0].values == std::vector<double>{1.0, 3.0, 2.0});
}

TEST_CASE("load_csv keeps first-appearance subject order and infers the domain") {
  const auto ds = from_csv("id,time,value\na,0.2,1.0\nb,0.5,2.0\na,0.8,3.0\n");
  CHECK(ds.n() == 2);
  CHECK(ds.subjects[0].id == "a");
  CHECK(ds.subjects[1].id == "b");
  CHECK(ds.subjects[0].size() == 2);
  CHECK(ds.subjects[1].size() == 1);
  CHECK(ds.t_lo == doctest::Approx(0.2));
  CHECK(ds.t_hi == doctest::Approx(0.8));
}

TEST_CASE("load_csv honors custom column names and ignores extras") {
  const auto ds = from_csv("age,subj,x,bmd\n10,a,9,0.5\n11,a,9,0.6\n", CsvColumns{"subj", "age", "bmd"});
  CHECK(ds.n() == 1);
  CHECK(ds.subjects[0].values == std::vector<double>{0.5, 0.6});
}

TEST_CASE("load_csv error paths") {
  CHECK_THROWS_AS(from_csv("id,time\na,0.1\n"), csv_schema_error);
  CHECK_THROWS_AS(from_csv(""), empty_data_error);
  CHECK_THROWS_AS(from_csv("id,time,value\n"), empty_data_error);
  try {
    from_csv("id,time,value\na,0.1,1\na,oops,2\n");
    FAIL("expected parse error");
  } catch (const csv_parse_error& e) {
    CHECK(e.row == 3);
  }
  CHECK_THROWS_AS(from_csv("id,time,value\na,0.1,nan\n"), csv_parse_error);
}

TEST_CASE("duplicate (subject,time) pairs are allowed and keep input order") {
  const auto ds = from_csv("id,time,value\na,0.5,1\na,0.5,2\na,0.2,9\n");
  CHECK(ds.subjects[0].times == std::vector<double>{0.2, 0.5, 0.5});
  CHECK(ds.subjects[0].values == std::vector<double>{9.0, 1.0, 2.0});
}

TEST_CASE("load_csv is order-stable within a subject") {
  rng::Rng rng(11);
  std::vector<std::pair<double, double>> obs;
  for (int j = 0; j < 12; ++j) obs.emplace_back(rng.uniform01(), rng.normal());
  for (int trial = 0; trial < 5; ++trial) {
    rng.shuffle(obs);
    std::ostringstream csv;
    csv << "id,time,value\n";
    for (const auto& [t, x] : obs) csv << "s," << t << "," << x << "\n";
    const auto ds = from_csv(csv.str());
    REQUIRE(ds.subjects[0].size() == obs.size());
    CHECK(std::is_sorted(ds.subjects[0].times.begin(), ds.subjects[0].times.end()));
    double sum = 0.0;
    for (double v : ds.subjects[0].values) sum += v;
    double expect = 0.0;
    for (const auto& [t, x] : obs) expect += x;
    CHECK(sum == doctest::Approx(expect));
  }
}

TEST_CASE("normalize_time maps the domain onto [0,1]") {
  SUBCASE("identity when already unit") {
    const auto ds = from_csv("id,time,value\na,0,1\na,1,2\n");
    const auto [unit, tf] = normalize_time(ds);
    CHECK(tf.is_identity());
    CHECK(unit.subjects[0].times == ds.subjects[0].times);
  }
  SUBCASE("affine map") {
    const auto ds = from_csv("id,time,value\na,2,1\na,4,2\na,6,3\n");
    const auto [unit, tf] = normalize_time(ds);
    CHECK(unit.subjects[0].times == std::vector<double>{0.0, 0.5, 1.0});
    CHECK(unit.t_lo == 0.0);
    CHECK(unit.t_hi == 1.0);
    CHECK(tf.from_unit(0.5) == doctest::Approx(4.0));
  }
  SUBCASE("degenerate domain is an error") {
    const auto ds = from_csv("id,time,value\na,3,1\nb,3,2\n");
    CHECK_THROWS_AS(normalize_time(ds), std::invalid_argument);
  }
}

TEST_CASE("normalize_time round-trips original times within 1e-12 relative") {
  rng::Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    SparseFunctionalDataset ds;
    const double lo = rng.uniform(-50.0, 50.0);
    const double hi = lo + rng.uniform(0.1, 100.0);
    ds.t_lo = lo;
    ds.t_hi = hi;
    SubjectRecord rec{"s", {}, {}};
    for (int j = 0; j < 30; ++j) {
      rec.times.push_back(rng.uniform(lo, hi));
      rec.values.push_back(rng.normal());
    }
    std::sort(rec.times.begin(), rec.times.end());
    ds.subjects.push_back(rec);
    const auto [unit, tf] = normalize_time(ds);
    for (std::size_t j = 0; j < rec.times.size(); ++j) {
      const double back = tf.from_unit(unit.subjects[0].times[j]);
      CHECK(std::abs(back - rec.times[j]) <= 1e-12 * std::max(1.0, std::abs(rec.times[j])));
    }
  }
}

TEST_CASE("validate reports violations") {
  SparseFunctionalDataset ok;
  ok.t_lo = 0.0;
  ok.t_hi = 1.0;
  ok.subjects.push_back({"a", {0.1, 0.4}, {1.0, 2.0}});
  ok.subjects.push_back({"b", {0.9}, {3.0}});
  CHECK_NOTHROW(validate(ok));

  SUBCASE("empty subject") {
    auto bad = ok;
    bad.subjects.push_back({"c", {}, {}});
    try {
      validate(bad);
      FAIL("expected validation error");
    } catch (const validation_error& e) {
      REQUIRE(e.issues.size() == 1);
      CHECK(e.issues[0].find("empty subject") != std::string::npos);
      CHECK(e.issues[0].find("'c'") != std::string::npos);
    }
  }
  SUBCASE("NaN value names subject and index") {
    auto bad = ok;
    bad.subjects[1].values[0] = std::nan("");
    try {
      validate(bad);
      FAIL("expected validation error");
    } catch (const validation_error& e) {
      REQUIRE(e.issues.size() == 1);
      CHECK(e.issues[0].find("'b'") != std::string::npos);
      CHECK(e.issues[0].find("observation 0") != std::string::npos);
    }
  }
  SUBCASE("empty dataset") {
    SparseFunctionalDataset bad;
    CHECK_THROWS_AS(validate(bad), validation_error);
  }
}

TEST_CASE("subset keeps the parent domain") {
  SparseFunctionalDataset ds;
  ds.t_lo = 0.0;
  ds.t_hi = 1.0;
  for (int i = 0; i < 4; ++i) ds.subjects.push_back({std::to_string(i), {0.25}, {1.0 * i}});
  const auto sub = ds.subset({2, 0});
  CHECK(sub.n() == 2);
  CHECK(sub.subjects[0].id == "2");
  CHECK(sub.subjects[1].id == "0");
  CHECK(sub.t_lo == 0.0);
  CHECK(sub.t_hi == 1.0);
}
