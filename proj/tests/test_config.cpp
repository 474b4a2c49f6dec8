#include "snipcheck/config.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace snipcheck;

TEST_CASE("kv parsing handles comments, quotes and order") {
  auto entries = parse_kv(
      "# compiler catalog\n"
      "0.8.21 = /opt/solc-0.8.21\n"
      "\n"
      "0.6.12 = \"/opt/with space/solc\"  \n"
      "name = value # trailing comment\n");
  REQUIRE(entries.size() == 3);
  CHECK(entries[0].first == "0.8.21");
  CHECK(entries[1].second == "/opt/with space/solc");
  CHECK(entries[2].second == "value");
}

TEST_CASE("malformed kv lines raise config errors") {
  CHECK_THROWS_AS(parse_kv("just text\n"), ConfigError);
  CHECK_THROWS_AS(parse_kv("= nokey\n"), ConfigError);
}

TEST_CASE("run config validation") {
  RunConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.max_rounds = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.max_rounds = 13;
  cfg.limits.loop_bound = -1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.limits.loop_bound = 3;
  cfg.backend = "ftp:nope";
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.backend = "http:http://127.0.0.1:9000";
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("config file keys apply and unknown keys fail") {
  RunConfig cfg;
  cfg.apply(parse_kv("max_rounds = 5\nloop_bound = 2\nprune = false\n"));
  CHECK(cfg.max_rounds == 5);
  CHECK(cfg.limits.loop_bound == 2);
  CHECK_FALSE(cfg.prune);
  CHECK_THROWS_AS(cfg.apply(parse_kv("nonsense = 1\n")), ConfigError);
}
