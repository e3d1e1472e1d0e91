#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>
#include <thread>

#include "focus/errors.hpp"
#include "focus/ledger.hpp"

using namespace focus;

namespace {

FlowEvent ev(Endpoint src, Endpoint dst, PayloadKind kind, bool derived, bool revealing = true,
             std::uint64_t bytes = 10, std::string task = "t") {
  return FlowEvent("r", 0, std::move(src), std::move(dst), kind, bytes, derived, revealing, std::move(task));
}

}  // namespace

TEST_CASE("endpoints print and parse") {
  for (const auto& e : {Endpoint::silo("client-007"), Endpoint::central(), Endpoint::public_repo()})
    CHECK(Endpoint::parse(e.str()) == e);
  CHECK(Endpoint::silo("a").str() == "silo:a");
  CHECK_THROWS_AS(Endpoint::parse("moon"), IoError);
  for (auto k : {PayloadKind::model_params, PayloadKind::local_update, PayloadKind::raw_data,
                 PayloadKind::demo_read, PayloadKind::fm_download, PayloadKind::task_metadata})
    CHECK(parse_payload_kind(to_string(k)) == k);
}

TEST_CASE("raw data cannot leave a silo") {
  CHECK_THROWS_AS(ev(Endpoint::silo("a"), Endpoint::central(), PayloadKind::raw_data, true), ForbiddenFlow);
  CHECK_THROWS_AS(ev(Endpoint::silo("a"), Endpoint::silo("b"), PayloadKind::raw_data, true), ForbiddenFlow);
  CHECK_NOTHROW(ev(Endpoint::silo("a"), Endpoint::silo("a"), PayloadKind::raw_data, true));
  CHECK_NOTHROW(ev(Endpoint::public_repo(), Endpoint::silo("a"), PayloadKind::raw_data, false));
}

TEST_CASE("perfect secrecy verdicts") {
  const std::set<std::string> ids{"a", "b"};
  CHECK(perfect_secrecy({}, ids).holds);

  std::vector<FlowEvent> icl{ev(Endpoint::public_repo(), Endpoint::silo("a"), PayloadKind::fm_download, false),
                             ev(Endpoint::public_repo(), Endpoint::silo("b"), PayloadKind::fm_download, false)};
  CHECK(perfect_secrecy(icl, ids).holds);

  std::vector<FlowEvent> fl{ev(Endpoint::central(), Endpoint::silo("a"), PayloadKind::model_params, false),
                            ev(Endpoint::silo("a"), Endpoint::central(), PayloadKind::local_update, true)};
  auto v = perfect_secrecy(fl, ids);
  CHECK_FALSE(v.holds);
  REQUIRE(v.witnesses.size() == 1);
  CHECK(v.witnesses[0] == fl[1]);

  // a silo reading its own data is not a leak; an unknown source is out of scope
  std::vector<FlowEvent> local{ev(Endpoint::silo("a"), Endpoint::silo("a"), PayloadKind::demo_read, true),
                               ev(Endpoint::silo("z"), Endpoint::central(), PayloadKind::local_update, true)};
  CHECK(perfect_secrecy(local, ids).holds);
  // non-derived payloads leaving a silo do not break secrecy
  CHECK(perfect_secrecy({ev(Endpoint::silo("a"), Endpoint::central(), PayloadKind::task_metadata, false)}, ids).holds);
}

TEST_CASE("task exposure") {
  std::vector<FlowEvent> events{
      ev(Endpoint::public_repo(), Endpoint::silo("a"), PayloadKind::fm_download, false, false, 5, "t1"),
      ev(Endpoint::silo("a"), Endpoint::central(), PayloadKind::local_update, true, true, 5, "t2"),
      ev(Endpoint::silo("a"), Endpoint::central(), PayloadKind::task_metadata, false, false, 5, "t3"),
      ev(Endpoint::public_repo(), Endpoint::silo("a"), PayloadKind::fm_download, false, false, 5, "")};
  auto ex = task_privacy_exposure(events, {"t4"});
  CHECK(ex == std::map<std::string, bool>{{"t1", false}, {"t2", true}, {"t3", false}, {"t4", false}});
}

TEST_CASE("byte totals") {
  std::vector<FlowEvent> events{ev(Endpoint::central(), Endpoint::silo("a"), PayloadKind::model_params, false, true, 7),
                                ev(Endpoint::silo("a"), Endpoint::central(), PayloadKind::local_update, true, true, 11),
                                ev(Endpoint::silo("a"), Endpoint::silo("b"), PayloadKind::demo_read, true, true, 3),
                                ev(Endpoint::silo("a"), Endpoint::silo("a"), PayloadKind::demo_read, true, true, 100)};
  auto t = ledger_bytes(events);
  CHECK(t.up == 14);
  CHECK(t.down == 10);
}

TEST_CASE("jsonl round trip and deterministic replay") {
  const std::vector<Endpoint> ends{Endpoint::silo("a"), Endpoint::silo("b"), Endpoint::central(), Endpoint::public_repo()};
  const std::vector<PayloadKind> kinds{PayloadKind::model_params, PayloadKind::local_update, PayloadKind::demo_read,
                                       PayloadKind::fm_download, PayloadKind::task_metadata};
  auto build = [&](std::uint64_t seed) {
    std::mt19937_64 r(seed);
    std::vector<FlowEvent> out;
    for (int i = 0; i < 100; ++i)
      out.emplace_back("run/x", r() % 50, ends[r() % 4], ends[r() % 4], kinds[r() % 5], r() % 100000, r() % 2 == 1,
                       r() % 2 == 1, "task" + std::to_string(r() % 3));
    return out;
  };
  const auto events = build(9);
  for (const auto& e : events) CHECK(FlowEvent::from_jsonl(e.to_jsonl()) == e);
  CHECK(ledger_to_jsonl(build(9)) == ledger_to_jsonl(events));
  CHECK(FlowEvent::from_jsonl(events[0].to_jsonl()).to_jsonl() == events[0].to_jsonl());
}

TEST_CASE("ledger appends from many threads") {
  FlowLedger ledger;
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t)
    threads.emplace_back([&ledger] {
      for (int i = 0; i < 250; ++i)
        ledger.append(ev(Endpoint::central(), Endpoint::silo("a"), PayloadKind::model_params, false));
    });
  for (auto& t : threads) t.join();
  CHECK(ledger.size() == 1000);
}
