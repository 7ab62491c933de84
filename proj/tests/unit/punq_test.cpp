#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <random>

#include "crdext/error.hpp"
#include "crdext/parser.hpp"
#include "crdext/punq.hpp"
#include "dense_oracle.hpp"
#include "fixtures.hpp"

using namespace crdext;

namespace {

auto kind_is(ErrorKind k) {
  return Catch::Matchers::Predicate<Error>([k](const Error& e) { return e.kind() == k; });
}

Schema four_by_three() {
  std::vector<TableDef> tables;
  for (const char* t : {"A", "B", "C", "D"}) tables.push_back({t, {{"x", 0, 9}, {"y", 0, 9}, {"z", 0, 9}}});
  return Schema(tables, {{{"A", "x"}, {"B", "x"}}});
}

ConjunctiveQuery cq(const Schema& s, const std::string& sql) { return to_conjunctive(parse(sql, s), s); }

std::vector<const FeatureSet*> ptrs(const std::vector<FeatureSet>& sets) {
  std::vector<const FeatureSet*> out;
  for (const auto& s : sets) out.push_back(&s);
  return out;
}

std::vector<LabeledSample> labeled(std::mt19937_64& rng, const Database& db, std::size_t n, bool constant) {
  std::vector<LabeledSample> out;
  while (out.size() < n) {
    auto q = to_conjunctive(fixtures::random_query(rng, db.schema(), false, 5, 2), db.schema());
    auto r = execute(db, q);
    if (r.card_dup == 0) continue;
    out.push_back({q, constant ? 0.5 : r.uniqueness_rate});
  }
  return out;
}

}  // namespace

TEST_CASE("layout lengths", "[punq][featurize]") {
  auto s = four_by_three();
  auto std_layout = FeatLayout::from_schema(s, FeatVariant::Standard);
  auto rev_layout = FeatLayout::from_schema(s, FeatVariant::Revised);
  CHECK(std_layout.nT() == 4);
  CHECK(std_layout.nC() == 12);
  CHECK(std_layout.length() == 56);
  CHECK(rev_layout.length() == 59);
  CHECK(FeatLayout::length_for(4, 12, FeatVariant::Standard) == 56);
  // Contiguous segments.
  CHECK(std_layout.t_off() == 12);
  CHECK(std_layout.j1_off() == 16);
  CHECK(std_layout.j2_off() == 28);
  CHECK(rev_layout.jo_off() == 28);
  CHECK(rev_layout.j2_off() == 31);
  CHECK(rev_layout.v_off() == 58);
  CHECK(std_layout.compatible_with(s));
}

TEST_CASE("featurize", "[punq][featurize]") {
  auto s = four_by_three();
  auto layout = FeatLayout::from_schema(s, FeatVariant::Standard);
  auto revised = FeatLayout::from_schema(s, FeatVariant::Revised);
  auto q = cq(s, "SELECT A.y, B.z FROM A, B WHERE A.x = B.x AND A.y > 9 AND B.z < 0 AND B.y = 3");
  auto v = featurize(q, layout);
  REQUIRE(v.size() == 2 + 2 + 1 + 3);
  std::size_t ones = 0, joins = 0, preds = 0;
  for (const auto& x : v) {
    if (x.entries.size() == 1) ++ones;
    if (x.entries.size() == 2) ++joins;
    if (x.entries.size() == 3) ++preds;
    for (auto [i, val] : x.entries) CHECK(i < layout.length());
  }
  CHECK(ones == 4);
  CHECK(joins == 1);
  CHECK(preds == 3);
  for (const auto& x : v) {
    if (x.entries.size() != 3) continue;
    auto c = x.entries[0].first - layout.c_off();
    auto value = x.entries[2].second;
    CHECK(x.entries[2].first == layout.v_off());
    if (layout.columns[c] == ColumnRef{"A", "y"}) CHECK(value == 1.0);
    if (layout.columns[c] == ColumnRef{"B", "z"}) CHECK(value == 0.0);
    if (layout.columns[c] == ColumnRef{"B", "y"}) CHECK(value == Catch::Approx(3.0 / 9.0));
  }
  for (const auto& x : featurize(q, revised))
    if (x.entries.size() == 3 && x.entries[1].first == revised.jo_off() + 1) CHECK(x.entries[2].first >= revised.j2_off());

  SECTION("inequality join needs the revised layout") {
    auto ineq = cq(s, "SELECT A.x FROM A, B WHERE A.x < B.x");
    CHECK_THROWS_MATCHES(featurize(ineq, layout), Error, kind_is(ErrorKind::Featurization));
    auto rv = featurize(ineq, revised);
    CHECK(std::count_if(rv.begin(), rv.end(), [](const SparseVec& x) { return x.entries.size() == 3; }) == 1);
  }
  SECTION("values outside the range clamp; constant columns map to 0") {
    auto clamp_q = cq(s, "SELECT A.x FROM A WHERE A.x > 100");
    CHECK(featurize(clamp_q, layout).back().entries.back().second == 1.0);
    auto constant = layout;
    constant.col_max[0] = constant.col_min[0];
    CHECK(constant.normalize(0, 5) == 0.0);
  }
  SECTION("changing a constant changes only the V coordinate") {
    auto a = featurize(cq(s, "SELECT A.x FROM A WHERE A.y = 2"), layout);
    auto b = featurize(cq(s, "SELECT A.x FROM A WHERE A.y = 7"), layout);
    REQUIRE(a.size() == b.size());
    std::size_t diffs = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      auto da = densify(a[i], layout.length()), db = densify(b[i], layout.length());
      for (std::size_t k = 0; k < da.size(); ++k)
        if (da[k] != db[k]) {
          ++diffs;
          CHECK(k == layout.v_off());
        }
    }
    CHECK(diffs == 1);
  }
  CHECK_THROWS_MATCHES(featurize(cq(fixtures::toy_db().schema(), "SELECT R.a FROM R"), layout), Error,
                       kind_is(ErrorKind::Featurization));
}

TEST_CASE("forward pass", "[punq]") {
  auto s = four_by_three();
  auto layout = FeatLayout::from_schema(s, FeatVariant::Standard);
  auto q = cq(s, "SELECT A.y FROM A, B WHERE A.x = B.x AND B.z < 4");

  CHECK(predict(PunqModel::zeros(layout, 8), q) == 0.5);

  auto model = PunqModel::initialized(layout, 16, 3);
  auto p = model.params.cast<double>();
  auto set = featurize(q, layout);

  SECTION("duplicated vectors shift the mean like the formula says") {
    for (std::size_t reps : {1u, 2u, 5u}) {
      FeatureSet dup = set;
      for (std::size_t r = 1; r < reps; ++r) dup.push_back(set.front());
      auto oracle = test_oracle::dense_forward(p, {dup}, {0.5}, 1e-4).yhat[0];
      CHECK(punq_forward_one(p, dup) == Catch::Approx(oracle).epsilon(1e-12));
    }
    // Duplicating the whole set leaves the mean unchanged.
    FeatureSet twice = set;
    twice.insert(twice.end(), set.begin(), set.end());
    CHECK(punq_forward_one(p, twice) == Catch::Approx(punq_forward_one(p, set)).epsilon(1e-12));
  }
  SECTION("atom order does not matter") {
    auto q2 = cq(s, "SELECT A.y FROM B, A WHERE B.z < 4 AND B.x = A.x");
    CHECK(predict(model, q2) == predict(model, q));
  }
  SECTION("output stays inside (0, 1)") {
    auto big = model;
    for (auto& w : big.params.data()) w *= 50.0f;
    double y = predict(big, q);
    CHECK(y >= 0.0);
    CHECK(y <= 1.0);
  }
}

TEST_CASE("q_error", "[punq]") {
  CHECK(q_error(3.0, 3.0) == 1.0);
  CHECK(q_error(2.0, 4.0) == 2.0);
  CHECK(q_error(4.0, 2.0) == 2.0);
  CHECK(q_error(0.2, 0.1) == Catch::Approx(2.0));
  CHECK_THROWS_MATCHES(q_error(0.0, 1.0), Error, kind_is(ErrorKind::Domain));
  CHECK_THROWS_MATCHES(q_error(1.0, -1.0), Error, kind_is(ErrorKind::Domain));
}

TEST_CASE("analytic gradients match central differences", "[punq][gradient]") {
  // One table, one column: L = 1 + 4 + 3 + 1 = 9.
  Schema s({{"R", {{"a", 0, 10}}}}, {});
  auto layout = FeatLayout::from_schema(s, FeatVariant::Standard);
  REQUIRE(layout.length() == 9);
  std::vector<FeatureSet> sets;
  for (const char* sql : {"SELECT R.a FROM R WHERE R.a < 3", "SELECT R.a FROM R WHERE R.a > 7 AND R.a < 9",
                          "SELECT R.a FROM R", "SELECT R.a FROM R WHERE R.a = 5"})
    sets.push_back(featurize(cq(s, sql), layout));
  const std::vector<double> labels{0.9, 0.05, 0.3, 0.7};

  std::size_t checked = 0, skipped = 0;
  double worst = 0.0;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    auto p = PunqModel::initialized(layout, 4, seed).params.cast<double>();
    for (auto& w : p.data()) w *= 2.0;  // push outputs away from the labels
    PunqParams<double> g;
    double loss = punq_loss(p, ptrs(sets), labels, 1e-4, &g);
    auto base = test_oracle::dense_forward(p, sets, labels, 1e-4);
    REQUIRE(loss == Catch::Approx(base.loss).epsilon(1e-12));
    const double h = 1e-4;
    for (std::size_t i = 0; i < p.size(); ++i) {
      auto plus = p, minus = p;
      plus.data()[i] += h;
      minus.data()[i] -= h;
      auto fp = test_oracle::dense_forward(plus, sets, labels, 1e-4);
      auto fm = test_oracle::dense_forward(minus, sets, labels, 1e-4);
      bool kink = fp.pattern != base.pattern || fm.pattern != base.pattern;
      for (std::size_t n = 0; n < labels.size(); ++n)
        kink = kink || (fp.yhat[n] - labels[n]) * (fm.yhat[n] - labels[n]) <= 0;
      if (kink) {
        ++skipped;
        continue;
      }
      double numeric = (fp.loss - fm.loss) / (2 * h);
      double analytic = g.data()[i];
      double rel = std::abs(numeric - analytic) / std::max({std::abs(numeric), std::abs(analytic), 1e-6});
      worst = std::max(worst, rel);
      ++checked;
    }
  }
  INFO("checked " << checked << ", skipped " << skipped);
  CHECK(checked > 3 * 30);
  CHECK(worst < 1e-4);
}

TEST_CASE("gradient stationarity and the value path", "[punq][gradient]") {
  Schema s({{"R", {{"a", 0, 10}}}}, {});
  auto layout = FeatLayout::from_schema(s, FeatVariant::Standard);
  std::vector<FeatureSet> sets{featurize(cq(s, "SELECT R.a FROM R WHERE R.a < 3"), layout),
                               featurize(cq(s, "SELECT R.a FROM R WHERE R.a > 8"), layout)};
  auto p = PunqModel::initialized(layout, 8, 11).params.cast<double>();

  // Labels equal to predictions: q-error sits at its minimum, gradient 0.
  auto exact = punq_forward(p, ptrs(sets));
  PunqParams<double> g;
  CHECK(punq_loss(p, ptrs(sets), exact, 1e-4, &g) == 1.0);
  for (double x : g.data()) REQUIRE(x == 0.0);

  // Away from the optimum the V-seg row of U_mid receives gradient.
  punq_loss(p, ptrs(sets), std::vector<double>{0.01, 0.99}, 1e-4, &g);
  CHECK(g.U_mid().row(static_cast<Eigen::Index>(layout.v_off())).norm() > 0.0);
}

TEST_CASE("training", "[punq][train]") {
  std::mt19937_64 rng(8);
  auto db = fixtures::random_db(rng, 8, 5);
  auto layout = FeatLayout::from_database(db, FeatVariant::Revised);

  TrainParams hp;
  hp.hidden = 32;
  hp.batch = 32;
  hp.lr = 0.01;
  hp.seed = 4;

  SECTION("constant labels are learned") {
    auto data = labeled(rng, db, 300, true);
    hp.max_epochs = 50;
    auto res = train(data, layout, hp);
    CHECK(res.model.meta.best_val_qerror <= 1.05);
    CHECK(res.log.epochs.size() <= 50);
    CHECK(evaluate_qerror(res.model, data).mean <= 1.05);
  }
  SECTION("seeded runs are bitwise identical and restore the best epoch") {
    auto data = labeled(rng, db, 200, false);
    hp.max_epochs = 15;
    hp.patience = 3;
    auto a = train(data, layout, hp);
    auto b = train(data, layout, hp);
    CHECK(a.log == b.log);
    CHECK(a.model.params.data() == b.model.params.data());
    CHECK(a.model.meta == b.model.meta);
    double best = 1e300;
    for (const auto& e : a.log.epochs) best = std::min(best, e.val_mean_qerror);
    CHECK(a.model.meta.best_val_qerror == best);
    CHECK(a.model.meta.train_size + a.model.meta.val_size == 200);
    CHECK(a.model.meta.val_size == 40);
  }
  SECTION("bad input") {
    CHECK_THROWS_MATCHES(train({}, layout, hp), Error, kind_is(ErrorKind::EmptyDataset));
    auto data = labeled(rng, db, 5, false);
    data[2].uniqueness = 0.0;
    CHECK_THROWS_MATCHES(train(data, layout, hp), Error, kind_is(ErrorKind::Domain));
  }
}

TEST_CASE("model serialization", "[punq][io]") {
  std::mt19937_64 rng(77);
  auto db = fixtures::random_db(rng, 8, 5);
  auto layout = FeatLayout::from_database(db, FeatVariant::Revised);
  TrainParams hp;
  hp.hidden = 16;
  hp.max_epochs = 3;
  auto data = labeled(rng, db, 100, false);
  auto model = train(data, layout, hp).model;

  auto path = std::filesystem::temp_directory_path() / "crdext_punq_roundtrip.bin";
  save(model, path);
  auto loaded = load_model(path);
  std::filesystem::remove(path);
  CHECK(loaded.layout == model.layout);
  CHECK(loaded.meta == model.meta);
  for (std::size_t i = 0; i < 100; ++i) REQUIRE(predict(loaded, data[i].query) == predict(model, data[i].query));

  auto bytes = serialize(model);
  SECTION("truncation is never a partial model") {
    for (std::size_t cut : {std::size_t{0}, std::size_t{5}, std::size_t{20}, bytes.size() / 2, bytes.size() - 1}) {
      auto bad = bytes.substr(0, cut);
      CHECK_THROWS_AS(deserialize(bad), Error);
    }
  }
  SECTION("version and dimension checks") {
    auto bad = bytes;
    bad[8] = 9;
    CHECK_THROWS_MATCHES(deserialize(bad), Error, kind_is(ErrorKind::VersionMismatch));
    bad = bytes;
    bad[16] = static_cast<char>(bad[16] + 1);  // nT
    CHECK_THROWS_MATCHES(deserialize(bad), Error, kind_is(ErrorKind::DimMismatch));
    CHECK_THROWS_MATCHES(check_compatible(model, fixtures::toy_db().schema()), Error, kind_is(ErrorKind::DimMismatch));
    CHECK_NOTHROW(check_compatible(model, db.schema()));
  }
  SECTION("file size is dominated by the weights") {
    auto big = PunqModel::zeros(FeatLayout::from_schema(four_by_three(), FeatVariant::Standard), 512);
    const std::size_t weights = 56 * 512 + 512 + 512 * 256 + 256 + 256 + 1;
    CHECK(big.params.size() == weights);
    auto size = serialize(big).size();
    CHECK(size > 4 * weights);
    CHECK(size < 4 * weights + 1024);
  }
}

TEST_CASE("punq predictor plugs into punq_extended", "[punq]") {
  std::mt19937_64 rng(5);
  auto db = fixtures::random_db(rng, 8, 5);
  auto model = std::make_shared<PunqModel>(PunqModel::initialized(FeatLayout::from_database(db, FeatVariant::Standard), 8, 1));
  auto ext = punq_extended(oracle_estimator(db), std::make_shared<PunqPredictor>(model));
  CHECK_FALSE(ext->capabilities().supports_inequality_join);
  for (int i = 0; i < 50; ++i) {
    auto q = to_conjunctive(fixtures::random_query(rng, db.schema(), false, 5, 2), db.schema());
    if (q.has_inequality_join()) continue;
    CHECK(ext->estimate(q) <= static_cast<double>(count(db, q)));
  }
}
