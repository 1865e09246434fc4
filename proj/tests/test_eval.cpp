#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "geotweet/error.hpp"
#include "geotweet/eval.hpp"

using namespace geotweet;
using namespace geotweet::eval;

namespace {

using Codes = std::vector<CountryCode>;

Codes repeat(std::initializer_list<std::pair<const char*, int>> parts) {
  Codes out;
  for (const auto& [code, n] : parts) out.insert(out.end(), static_cast<std::size_t>(n), code);
  return out;
}

geo::CountryTable centroid_table() {
  geo::CountryTable t;
  t.add({"XA", {0, 0}, {}, {}});
  t.add({"XB", {0, 90}, {}, {}});
  t.add({"XC", {45, 10}, {}, {}});
  t.add({"XD", {-30, -60}, {}, {}});
  t.add({"XE", {10, 170}, {}, {}});
  t.add({"XF", {60, -120}, {}, {}});
  return t;
}

const Codes kSix = {"XA", "XB", "XC", "XD", "XE", "XF"};

std::pair<Codes, Codes> random_pairs(std::mt19937_64& rng, std::size_t n) {
  Codes pred, truth;
  for (std::size_t i = 0; i < n; ++i) {
    truth.push_back(kSix[rng() % 6]);
    // Bias towards correct answers so recalls vary.
    pred.push_back(rng() % 3 == 0 ? truth.back() : kSix[rng() % 6]);
  }
  return {pred, truth};
}

}  // namespace

TEST_SUITE("eval") {
  TEST_CASE("micro accuracy") {
    CHECK(micro_accuracy(Codes{"A", "B"}, Codes{"A", "B"}) == 1.0);
    CHECK(micro_accuracy(Codes{"A", "A", "A", "A"}, Codes{"A", "A", "A", "B"}) == 0.75);
    CHECK(micro_accuracy(repeat({{"A", 100}}), repeat({{"A", 90}, {"B", 10}})) == 0.9);
    CHECK_THROWS_AS(micro_accuracy(Codes{"A"}, Codes{"A", "B"}), ContractError);
    CHECK_THROWS_AS(micro_accuracy(Codes{}, Codes{}), ContractError);
  }

  TEST_CASE("macro accuracy") {
    CHECK(macro_accuracy(repeat({{"A", 100}}), repeat({{"A", 90}, {"B", 10}})) == 0.5);
    CHECK(macro_accuracy(Codes{"A", "B"}, Codes{"A", "B"}) == 1.0);
    // Recalls 1.0, 0.5, 0.0.
    CHECK(macro_accuracy(Codes{"A", "A", "B", "A", "A"}, Codes{"A", "A", "B", "B", "C"}) == doctest::Approx(0.5));
    // A universe class absent from truth does not enter the mean.
    CHECK(macro_accuracy(Codes{"A", "B"}, Codes{"A", "A"}, Codes{"A", "B", "C"}) == 0.5 * 2 - 0.5);
    CHECK_THROWS_AS(macro_accuracy(Codes{"A"}, Codes{"Z"}, Codes{"A", "B"}), ContractError);
    CHECK_THROWS_AS(macro_accuracy(Codes{}, Codes{}), ContractError);
  }

  TEST_CASE("mse in squared kilometres") {
    const auto t = centroid_table();
    CHECK(mse_km2(Codes{"XA", "XB"}, Codes{"XA", "XB"}, t) == 0.0);
    CHECK(mse_km2(Codes{"XA"}, Codes{"XB"}, t) == doctest::Approx(10007.543 * 10007.543).epsilon(1e-7));
    CHECK(mse_km2(Codes{"XA"}, Codes{"XB"}, t) == doctest::Approx(1.00151e8).epsilon(1e-5));
    const double d = geo::haversine_km({45, 10}, {-30, -60});
    CHECK(mse_km2(Codes{"XA", "XC"}, Codes{"XA", "XD"}, t) == doctest::Approx((0.0 + d * d) / 2.0).epsilon(1e-14));
    CHECK_THROWS_WITH_AS(mse_km2(Codes{"QQ"}, Codes{"XA"}, t), doctest::Contains("QQ"), LookupError);
  }

  TEST_CASE("mse is permutation invariant and zero only when all correct") {
    std::mt19937_64 rng(3);
    const auto t = centroid_table();
    auto [pred, truth] = random_pairs(rng, 500);
    const double base = mse_km2(pred, truth, t);
    std::vector<std::size_t> order(pred.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    Codes p2, t2;
    for (auto i : order) p2.push_back(pred[i]), t2.push_back(truth[i]);
    CHECK(mse_km2(p2, t2, t) == doctest::Approx(base).epsilon(1e-13));
    CHECK(base > 0.0);
    CHECK(mse_km2(truth, truth, t) == 0.0);
  }

  TEST_CASE("per-country precision, recall, F1") {
    const auto r = per_country_prf(Codes{"A", "A", "B"}, Codes{"A", "B", "B"});
    CHECK(r.at("A").precision == 0.5);
    CHECK(r.at("A").recall == 1.0);
    CHECK(r.at("A").f1 == doctest::Approx(2.0 / 3.0));
    CHECK(r.at("B").precision == 1.0);
    CHECK(r.at("B").recall == 0.5);
    CHECK(r.at("B").f1 == doctest::Approx(2.0 / 3.0));
    CHECK(r.at("B").support == 2);

    const auto never = per_country_prf(Codes{"A", "A"}, Codes{"A", "C"});
    CHECK(never.at("C").precision == 0.0);
    CHECK(never.at("C").recall == 0.0);
    CHECK(never.at("C").f1 == 0.0);

    const auto perfect = per_country_prf(Codes{"A", "B", "C"}, Codes{"A", "B", "C"});
    for (const auto& [code, s] : perfect) CHECK((s.precision == 1.0 && s.recall == 1.0 && s.f1 == 1.0));
  }

  TEST_CASE("confusion matrix") {
    const auto m = confusion(Codes{"A", "B"}, Codes{"A", "B"}, {"A", "B"});
    CHECK(m.at(0, 0) == 1);
    CHECK(m.at(1, 1) == 1);
    CHECK(m.at(0, 1) == 0);
    CHECK(m.at(1, 0) == 0);
    const ConfusionMatrix doubled = aggregate(std::vector<ConfusionMatrix>{m, m});
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t j = 0; j < 2; ++j) CHECK(doubled.at(i, j) == 2 * m.at(i, j));

    CHECK_THROWS_AS(confusion(Codes{"A"}, Codes{"Z"}, {"A", "B"}), ContractError);
    const auto swapped = confusion(Codes{"A"}, Codes{"A"}, {"B", "A"});
    CHECK_THROWS_AS(aggregate(std::vector<ConfusionMatrix>{m, swapped}), ContractError);

    const auto wide = m.reindexed({"A", "B", "C"});
    CHECK(wide.at(1, 1) == 1);
    CHECK(wide.row_sum(2) == 0);
    CHECK_THROWS_AS(m.reindexed({"A"}), ContractError);
    CHECK(m.to_csv() == "truth\\pred,A,B\nA,1,0\nB,0,1\n");
  }

  TEST_CASE("oracle union") {
    const Codes truth = {"A", "B", "A", "B"};
    const Codes p1 = {"A", "A", "A", "A"};
    CHECK(oracle_union_accuracy(std::vector<Codes>{p1}, truth) == micro_accuracy(p1, truth));
    const Codes p2 = {"B", "B", "B", "B"};
    CHECK(oracle_union_accuracy(std::vector<Codes>{p1, p2}, truth) == 1.0);
    CHECK_THROWS_AS(oracle_union_accuracy(std::vector<Codes>{Codes{"A"}}, truth), ContractError);

    std::mt19937_64 rng(11);
    std::vector<Codes> sets;
    Codes t3;
    for (int k = 0; k < 3; ++k) {
      auto [pred, truth_k] = random_pairs(rng, 300);
      if (k == 0) t3 = truth_k;
      sets.push_back(pred);
    }
    std::size_t hit = 0;
    for (std::size_t i = 0; i < t3.size(); ++i) {
      hit += std::any_of(sets.begin(), sets.end(), [&](const Codes& s) { return s[i] == t3[i]; });
    }
    CHECK(oracle_union_accuracy(sets, t3) == static_cast<double>(hit) / t3.size());
  }

  TEST_CASE("metric identities on random data") {
    std::mt19937_64 rng(1234);
    for (int trial = 0; trial < 50; ++trial) {
      auto [pred, truth] = random_pairs(rng, 1000);
      const auto m = confusion(pred, truth, kSix);
      const double micro = micro_accuracy(pred, truth);
      CHECK(micro == static_cast<double>(m.trace()) / static_cast<double>(truth.size()));
      CHECK(m.total() == truth.size());

      const auto prf = per_country_prf(pred, truth);
      double mean_recall = 0.0, weighted = 0.0;
      std::size_t present = 0;
      for (std::size_t c = 0; c < kSix.size(); ++c) {
        const auto n_c = static_cast<std::size_t>(std::count(truth.begin(), truth.end(), kSix[c]));
        CHECK(m.row_sum(c) == n_c);
        if (n_c == 0) continue;
        ++present;
        mean_recall += prf.at(kSix[c]).recall;
        weighted += static_cast<double>(n_c) / truth.size() * prf.at(kSix[c]).recall;
        const auto& s = prf.at(kSix[c]);
        if (s.precision + s.recall > 0) {
          CHECK(s.f1 == doctest::Approx(2 * s.precision * s.recall / (s.precision + s.recall)));
        }
      }
      CHECK(std::abs(macro_accuracy(pred, truth) - mean_recall / present) < 1e-12);
      CHECK(std::abs(micro - weighted) < 1e-12);
    }
  }

  TEST_CASE("evaluate treats OTHER as an always-wrong class outside the macro mean") {
    const auto t = centroid_table();
    const Codes pred = {"XA", "XA", "XB", "XA"};
    const Codes truth = {"XA", "XB", "XB", std::string(kOtherLabel)};
    const Codes real = {"XA", "XB", "XB", "XC"};
    const auto r = evaluate(pred, truth, real, t);
    CHECK(r.n == 4);
    CHECK(r.micro_accuracy == 0.5);
    CHECK(r.macro_accuracy == doctest::Approx((1.0 + 0.5) / 2));
    CHECK(r.macro_accuracy_with_other == doctest::Approx((1.0 + 0.5 + 0.0) / 3));
    const double d_ab = geo::haversine_km({0, 0}, {0, 90});
    const double d_ac = geo::haversine_km({0, 0}, {45, 10});
    CHECK(r.mse_km2 == doctest::Approx((d_ab * d_ab + d_ac * d_ac) / 4).epsilon(1e-13));

    const auto plain = evaluate(Codes{"XA", "XB"}, Codes{"XA", "XA"}, t);
    CHECK(plain.macro_accuracy == plain.macro_accuracy_with_other);
    CHECK_THROWS_AS(evaluate(pred, truth, t), Error);  // OTHER needs real countries for MSE
  }

  TEST_CASE("mean report and csv") {
    const std::vector<EvalReport> rs = {{0.5, 0.25, 10.0, 4, 0.25}, {1.0, 0.75, 30.0, 6, 0.75}};
    const auto m = mean_report(rs);
    CHECK(m.micro_accuracy == 0.75);
    CHECK(m.macro_accuracy == 0.5);
    CHECK(m.mse_km2 == 20.0);
    CHECK(m.n == 5);
    const auto csv = per_country_csv(per_country_prf(Codes{"A", "A", "B"}, Codes{"A", "B", "B"}));
    CHECK(csv.starts_with("country,P,R,F1,support\n"));
    CHECK(csv.find("\nB,1,0.5,") != std::string::npos);
  }

  TEST_CASE("compensated summation") {
    CompensatedSum s;
    s.add(1e16);
    for (int i = 0; i < 1000; ++i) s.add(1.0);
    s.add(-1e16);
    CHECK(s.value() == 1000.0);
  }
}
