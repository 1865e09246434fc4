#include <random>

#include "doctest.h"
#include "geotweet/error.hpp"
#include "geotweet/gazetteer.hpp"
#include "geotweet/geo.hpp"

using namespace geotweet;
using namespace geotweet::geo;

TEST_SUITE("gazetteer") {
  TEST_CASE("normalization") {
    CHECK(normalize_place("  San José,  de MAYO!! ") == "san jose de mayo");
    CHECK(normalize_place("São Paulo") == "sao paulo");
    CHECK(normalize_place("Москва") == "москва");
    CHECK(normalize_place("...") == "");
  }

  TEST_CASE("relevance scoring tiers") {
    CHECK(relevance_score("san jose de mayo", "san jose de mayo") == 3.0);
    CHECK(relevance_score("san jose de mayo", "san jose") == 2.0);
    CHECK(relevance_score("jose", "san jose") == 2.0);
    CHECK(relevance_score("new york", "york new") == doctest::Approx(0.999));
    CHECK(relevance_score("paris texas", "paris france") == doctest::Approx(0.999 / 3.0));
    CHECK(relevance_score("lyon", "paris") == 0.0);
    CHECK(relevance_score("", "paris") == 0.0);
  }

  TEST_CASE("empty or unmatched query falls back to the majority") {
    const std::vector<GazetteerEntry> gaz = {{"Paris", {}, "FR", 2000000}};
    CHECK(gazetteer_lookup("", gaz, LookupMode::relevance, "US") == "US");
    CHECK(gazetteer_lookup("   ", gaz, LookupMode::population, "US") == "US");
    CHECK(gazetteer_lookup("somewhere in the world", gaz, LookupMode::relevance, "US") == "US");
    CHECK(Gazetteer(gaz).lookup("", LookupMode::population, "US") == "US");
  }

  TEST_CASE("population mode prefers the larger place") {
    const std::vector<GazetteerEntry> gaz = {{"Springfield", {}, "US", 150000}, {"Springfield", {}, "XB", 10000}};
    CHECK(gazetteer_lookup("springfield", gaz, LookupMode::population, "ZZ") == "US");
    CHECK(Gazetteer(gaz).lookup("Springfield", LookupMode::population, "ZZ") == "US");
  }

  TEST_CASE("relevance mode prefers the closer name") {
    const std::vector<GazetteerEntry> gaz = {{"San Jose", {}, "US", 1000000}, {"San José de Mayo", {}, "XB", 30000}};
    // Score both candidates with the scoring function: exact (3) beats
    // token containment (2), so relevance picks XB; population picks US.
    CHECK(relevance_score(normalize_place("san jose de mayo"), normalize_place("San José de Mayo")) == 3.0);
    CHECK(relevance_score(normalize_place("san jose de mayo"), normalize_place("San Jose")) == 2.0);
    CHECK(gazetteer_lookup("san jose de mayo", gaz, LookupMode::relevance, "ZZ") == "XB");
    CHECK(gazetteer_lookup("san jose de mayo", gaz, LookupMode::population, "ZZ") == "US");
  }

  TEST_CASE("alternate names match") {
    const std::vector<GazetteerEntry> gaz = {{"New York City", {"NYC", "Big Apple"}, "US", 8000000},
                                             {"London", {"Londres"}, "GB", 9000000}};
    CHECK(gazetteer_lookup("nyc", gaz, LookupMode::relevance, "ZZ") == "US");
    CHECK(Gazetteer(gaz).lookup("Londres", LookupMode::relevance, "ZZ") == "GB");
  }

  TEST_CASE("indexed lookup matches the full scan and is total") {
    std::mt19937_64 rng(3);
    const std::vector<std::string> words = {"san", "jose", "de", "mayo", "new", "york", "springfield",
                                            "paris", "city", "north", "port", "saint", "louis"};
    const std::vector<std::string> codes = {"US", "XB", "FR", "GB", "CA"};
    std::vector<GazetteerEntry> gaz;
    std::uniform_int_distribution<std::size_t> w(0, words.size() - 1), c(0, codes.size() - 1), len(1, 3);
    std::uniform_int_distribution<std::uint64_t> pop(0, 5);
    const auto phrase = [&] {
      std::string s;
      for (std::size_t i = 0, n = len(rng); i < n; ++i) s += (i ? " " : "") + words[w(rng)];
      return s;
    };
    for (int i = 0; i < 60; ++i) gaz.push_back({phrase(), {phrase()}, codes[c(rng)], pop(rng) * 1000});
    const Gazetteer indexed(gaz);
    for (int i = 0; i < 500; ++i) {
      const auto q = i % 50 == 0 ? std::string("¿¿ ??") : phrase();
      for (auto mode : {LookupMode::population, LookupMode::relevance}) {
        const auto a = gazetteer_lookup(q, gaz, mode, "US");
        CHECK(a == indexed.lookup(q, mode, "US"));
        CHECK(geo::is_country_code(a));
      }
    }
  }

  TEST_CASE("gazetteer TSV") {
    const auto gaz = parse_gazetteer("name\talt\tiso2\tpopulation\nSan Jose\tSJ, San José\tUS\t1000000\n\n");
    REQUIRE(gaz.size() == 1);
    CHECK(gaz[0].alternate_names == std::vector<std::string>{"SJ", "San José"});
    CHECK(gaz[0].population == 1000000);
    CHECK_THROWS_AS(parse_gazetteer("San Jose\tUS\t100\n"), LoadError);
    CHECK_THROWS_AS(parse_gazetteer("San Jose\t\tus\t100\n"), LoadError);
    CHECK_THROWS_AS(parse_gazetteer("a\t\tUS\t1\nSan Jose\t\tUS\t-4\n"), LoadError);
    CHECK_THROWS_AS(parse_gazetteer("\t\tUS\t1\n"), LoadError);
  }

  TEST_CASE("lookup mode names") {
    CHECK(parse_lookup_mode("population") == LookupMode::population);
    CHECK(to_string(LookupMode::relevance) == "relevance");
    CHECK_THROWS_AS(parse_lookup_mode("fame"), ConfigError);
  }
}
