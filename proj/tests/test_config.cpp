#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>

#include "dcep/config_io.hpp"
#include "dcep/params.hpp"

using namespace dcep;

TEST_CASE("key-value parse and round trip") {
    auto kv = KeyValueFile::parse("# comment\nplant.C_pw = 4.186\n\nname = hello world\n");
    CHECK(kv.get_double("plant.C_pw").value() == doctest::Approx(4.186));
    CHECK(kv.get_string("name").value() == "hello world");
    CHECK(!kv.get_double("missing").has_value());

    auto again = KeyValueFile::parse(kv.to_string());
    CHECK(again.get_string("name").value() == "hello world");
}

TEST_CASE("malformed lines are rejected") {
    CHECK_THROWS(KeyValueFile::parse("no equals sign here\n"));
    KeyValueFile kv = KeyValueFile::parse("x = notanumber\n");
    CHECK_THROWS(kv.get_double("x"));
}

TEST_CASE("plant params default, save, load") {
    PlantParams p;
    p.validate();

    std::string path = "params_roundtrip_test.cfg";
    p.save(path);
    PlantParams q = PlantParams::load(path);
    CHECK(q.C_pw == doctest::Approx(p.C_pw));
    CHECK(q.M_TES == doctest::Approx(p.M_TES));
    CHECK(q.beta3 == doctest::Approx(p.beta3));
    CHECK(q.n_ch_max == p.n_ch_max);
    std::remove(path.c_str());
}

TEST_CASE("params validation rejects bad weights") {
    PlantParams p;
    p.r1 = 5.0;  // fails r1 >= 10*max(r2, r3)
    CHECK_THROWS(p.validate());
    p = PlantParams{};
    p.c3 = 0.0;
    CHECK_THROWS(p.validate());
}

TEST_CASE("config overrides reach the params") {
    auto kv = KeyValueFile::parse("plant.M_TES = 2e6\nplant.n_ch_max = 5\n");
    PlantParams p = PlantParams::from_config(kv);
    CHECK(p.M_TES == doctest::Approx(2e6));
    CHECK(p.n_ch_max == 5);
}
