#include <cstdio>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>

#include "doctest.h"
#include "upen/config.hpp"
#include "upen/error.hpp"

using namespace upen;

namespace {

std::optional<ErrorCode> code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("defaults cover the documented keys") {
    const Config c;
    CHECK(c.get("run.task") == "explore");
    CHECK(c.get_double("policy.alpha1") == 0.1);
    CHECK(c.get_double("policy.alpha2") == 0.5);
    CHECK(c.get_int("rrt.max_paths") == 10);
    CHECK(c.get_int("rrt.step_cells") == 5);
    CHECK(c.get_double("rrt.goal_rate") == 0.2);
    CHECK(c.get_int("policy.explore_cadence") == 30);
    CHECK(c.get_int("policy.pointgoal_cadence") == 20);
    CHECK(c.get_double("run.success_radius_m") == 0.2);
    CHECK(c.get_int_list("run.snapshots") == std::vector<int>{100, 250, 500, 1000});
    CHECK_FALSE(c.get_bool("run.artifacts"));
  }

  TEST_CASE("sectioned files parse with comments and whitespace") {
    Config c;
    std::istringstream in("# header\n[run]\n  task = pointgoal  # trailing\nepisodes=7\n\n[policy]\nalpha1 = 0\n");
    c.parse(in);
    CHECK(c.get("run.task") == "pointgoal");
    CHECK(c.get_int("run.episodes") == 7);
    CHECK(c.get_double("policy.alpha1") == 0.0);
    CHECK(c.get_double("policy.alpha2") == 0.5);
  }

  TEST_CASE("malformed input is rejected") {
    Config c;
    const auto parse = [&](const char* text) {
      return code_of([&] {
        std::istringstream in(text);
        c.parse(in);
      });
    };
    CHECK(parse("task = explore\n") == ErrorCode::kInvalidArgument);
    CHECK(parse("[run\n") == ErrorCode::kInvalidArgument);
    CHECK(parse("[run]\ntask\n") == ErrorCode::kInvalidArgument);
    CHECK(parse("[run]\nbogus = 1\n") == ErrorCode::kInvalidArgument);
    CHECK(code_of([&] { c.set("run.nope", "1"); }) == ErrorCode::kInvalidArgument);
    c.set("run.episodes", "3x");
    CHECK(code_of([&] { c.get_int("run.episodes"); }) == ErrorCode::kInvalidArgument);
    c.set("policy.alpha1", "abc");
    CHECK(code_of([&] { c.get_double("policy.alpha1"); }) == ErrorCode::kInvalidArgument);
    c.set("run.artifacts", "maybe");
    CHECK(code_of([&] { c.get_bool("run.artifacts"); }) == ErrorCode::kInvalidArgument);
    c.set("run.snapshots", "1,x");
    CHECK(code_of([&] { c.get_int_list("run.snapshots"); }) == ErrorCode::kInvalidArgument);
    CHECK(code_of([&] { c.load("/nonexistent/upen.cfg"); }) == ErrorCode::kIo);
  }

  TEST_CASE("dump round-trips through parse") {
    Config a;
    a.set("run.task", "pointgoal");
    a.set("world.rows", "120");
    Config b;
    std::istringstream in(a.dump());
    b.parse(in);
    CHECK(b.dump() == a.dump());
    CHECK(b.get_int("world.rows") == 120);
  }

  TEST_CASE("files load from disk") {
    const std::string path = "config_test.cfg";
    std::ofstream(path) << "[rrt]\niterations = 99\n";
    Config c;
    c.load(path);
    CHECK(c.get_int("rrt.iterations") == 99);
    std::remove(path.c_str());
  }

  TEST_CASE("booleans accept common spellings") {
    Config c;
    for (const char* t : {"true", "1", "yes", "on"}) {
      c.set("run.artifacts", t);
      CHECK(c.get_bool("run.artifacts"));
    }
    for (const char* f : {"false", "0", "no", "off"}) {
      c.set("run.artifacts", f);
      CHECK_FALSE(c.get_bool("run.artifacts"));
    }
  }
}
