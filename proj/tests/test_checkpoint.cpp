#include <cstring>

#include "doctest.h"
#include "ran/checkpoint.hpp"
#include "ran/rng.hpp"

using namespace ran;

TEST_CASE("checkpoint: bit-exact round trip") {
    Rng rng(42);
    Checkpoint ck;
    Vec v1(7);
    for (double& x : v1) x = rng.uniform(-1e6, 1e6);
    v1[0] = 0.1;  // not exactly representable
    v1[1] = -0.0;
    v1[2] = 1e-308;
    ck.put("q0", 7, 1, v1);
    Vec m1(12);
    for (double& x : m1) x = rng.uniform(-1, 1);
    ck.put("classifier.W", 3, 4, m1);

    const auto bytes = ck.serialize();
    const Checkpoint back = Checkpoint::deserialize(bytes);
    REQUIRE(back.entries().size() == 2);
    CHECK(back.get("q0").rows == 7);
    CHECK(back.get("classifier.W").cols == 4);
    // compare raw bit patterns
    CHECK(std::memcmp(back.get("q0").data.data(), v1.data(),
                      v1.size() * sizeof(double)) == 0);
    CHECK(std::memcmp(back.get("classifier.W").data.data(), m1.data(),
                      m1.size() * sizeof(double)) == 0);
    CHECK(back.serialize() == bytes);
}

TEST_CASE("checkpoint: file round trip") {
    Checkpoint ck;
    ck.put("a", 2, 2, {1.0, 2.0, 3.0, 4.25});
    const std::string path = "ckpt_test_roundtrip.bin";
    ck.save(path);
    const Checkpoint back = Checkpoint::load(path);
    CHECK(back.serialize() == ck.serialize());
    std::remove(path.c_str());
}

TEST_CASE("checkpoint: error paths") {
    Checkpoint ck;
    ck.put("x", 2, 1, {1.0, 2.0});
    CHECK_THROWS_AS(ck.put("x", 2, 1, {3.0, 4.0}), ParseError);
    CHECK_THROWS_AS(ck.put("bad", 3, 1, {1.0}), DimensionError);
    CHECK_THROWS_AS(ck.get("missing"), ParseError);

    Parameter p("x", 3, 1);
    CHECK_THROWS_AS(ck.load_into(p), DimensionError);

    auto bytes = ck.serialize();
    bytes.resize(bytes.size() - 4);
    CHECK_THROWS_AS(Checkpoint::deserialize(bytes), ParseError);
    bytes[0] = 'X';
    CHECK_THROWS_AS(Checkpoint::deserialize(bytes), ParseError);

    CHECK_THROWS_AS(Checkpoint::load("no_such_file.bin"), IoError);
}

TEST_CASE("checkpoint: parameter helpers") {
    Parameter p("w", 2, 3);
    for (std::size_t i = 0; i < p.size(); ++i)
        p.value[i] = static_cast<double>(i) * 0.5;
    Checkpoint ck;
    ck.put(p);
    Parameter q("w", 2, 3);
    ck.load_into(q);
    CHECK(q.value == p.value);
}
