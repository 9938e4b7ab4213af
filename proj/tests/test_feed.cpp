#include <doctest.h>

#include <sstream>

#include "fogpipe/feed.hpp"
#include "fogpipe/rng.hpp"

using namespace fogpipe;

namespace {

RawTuple random_raw_tuple(Rng& rng) {
  auto token = [&rng](const char* prefix) {
    return std::string(prefix) + std::to_string(rng.next_int(0, 9999));
  };
  RawTuple t;
  t.route_id = token("r");
  t.route_number = std::to_string(rng.next_int(0, 99));
  t.vehicle_id = token("bus");
  if (rng.chance(0.9)) t.lat = -90.0 + rng.next_double() * 180.0;
  if (rng.chance(0.9)) t.lon = -180.0 + rng.next_double() * 360.0;
  if (rng.chance(0.9)) t.ts_ms = rng.next_int(0, 2'000'000'000'000LL);
  int extras = static_cast<int>(rng.next_int(0, 3));
  for (int i = 0; i < extras; ++i) {
    std::string value = token("v");
    if (rng.chance(0.3)) value += "=x";  // values may contain '='
    t.extras.emplace_back(token("k"), value);
  }
  return t;
}

}  // namespace

TEST_CASE("parse_tuple maps the six core columns") {
  RawTuple t;
  std::string err;
  REQUIRE(parse_tuple("r12,12,bus7,46.09,-64.79,1465387200000", t, err));
  CHECK(t.route_id == "r12");
  CHECK(t.route_number == "12");
  CHECK(t.vehicle_id == "bus7");
  CHECK(t.lat == 46.09);
  CHECK(t.lon == -64.79);
  CHECK(t.ts_ms == 1465387200000);
  CHECK(t.extras.empty());
}

TEST_CASE("parse_tuple keeps unknown columns as extras in input order") {
  RawTuple t;
  std::string err;
  REQUIRE(parse_tuple("r12,12,bus7,46.09,-64.79,1465387200000,door=open,temp=7", t, err));
  REQUIRE(t.extras.size() == 2);
  CHECK(t.extras[0] == std::pair<std::string, std::string>("door", "open"));
  CHECK(t.extras[1] == std::pair<std::string, std::string>("temp", "7"));
}

TEST_CASE("parse_tuple names the offending column") {
  RawTuple t;
  std::string err;
  CHECK_FALSE(parse_tuple("r12,12,bus7,abc,-64.79,1465387200000", t, err));
  CHECK(err.find("lat") != std::string::npos);
  CHECK_FALSE(parse_tuple("r12,12,bus7,46.09,x,1465387200000", t, err));
  CHECK(err.find("lon") != std::string::npos);
  CHECK_FALSE(parse_tuple("r12,12,bus7,46.09,-64.79,noon", t, err));
  CHECK(err.find("ts") != std::string::npos);
  CHECK_FALSE(parse_tuple("r12,12,bus7", t, err));
  CHECK(err.find("6") != std::string::npos);
}

TEST_CASE("empty numeric columns parse as absent fields") {
  RawTuple t;
  std::string err;
  REQUIRE(parse_tuple("r12,12,bus7,,-64.79,1465387200000", t, err));
  CHECK_FALSE(t.lat.has_value());
  CHECK(t.lon.has_value());
}

TEST_CASE("serialize_tuple emits no trailing comma without extras") {
  RawTuple t;
  std::string err;
  REQUIRE(parse_tuple("r1,1,bus1,1.5,2.5,100", t, err));
  CHECK(serialize_tuple(t) == "r1,1,bus1,1.5,2.5,100");
}

TEST_CASE("context tuples serialize label and dist as trailing extras") {
  ContextTuple ctx;
  ctx.tuple.route_id = "r1";
  ctx.tuple.route_number = "1";
  ctx.tuple.vehicle_id = "bus1";
  ctx.tuple.lat = 46.0;
  ctx.tuple.lon = -64.0;
  ctx.tuple.ts_ms = 1000;
  ctx.label = MotionLabel::kStop;
  ctx.dist_prev_m = 7.2;
  CHECK(serialize_tuple(ctx) == "r1,1,bus1,46,-64,1000,label=stop,dist=7.2");

  ctx.label = MotionLabel::kMove;
  ctx.dist_prev_m.reset();
  CHECK(serialize_tuple(ctx) == "r1,1,bus1,46,-64,1000,label=move");
}

TEST_CASE("round trip: parse(serialize(t)) reproduces every field") {
  Rng rng(1234);
  for (int i = 0; i < 1000; ++i) {
    RawTuple t = random_raw_tuple(rng);
    RawTuple back;
    std::string err;
    REQUIRE_MESSAGE(parse_tuple(serialize_tuple(t), back, err), err);
    CHECK(back == t);
  }
}

TEST_CASE("round trip: context tuples survive via label/dist extras") {
  Rng rng(99);
  for (int i = 0; i < 300; ++i) {
    ContextTuple ctx;
    ctx.tuple.route_id = "r" + std::to_string(rng.next_int(1, 30));
    ctx.tuple.route_number = std::to_string(rng.next_int(1, 30));
    ctx.tuple.vehicle_id = "bus" + std::to_string(rng.next_int(1, 99));
    ctx.tuple.lat = -90.0 + rng.next_double() * 180.0;
    ctx.tuple.lon = -180.0 + rng.next_double() * 360.0;
    ctx.tuple.ts_ms = rng.next_int(0, 2'000'000'000'000LL);
    if (rng.chance(0.8)) {
      ctx.dist_prev_m = rng.next_double() * 40.0;
      ctx.label = *ctx.dist_prev_m < 15.0 ? MotionLabel::kStop : MotionLabel::kMove;
    }
    RawTuple raw;
    std::string err;
    REQUIRE(parse_tuple(serialize_tuple(ctx), raw, err));
    ContextTuple back;
    REQUIRE_MESSAGE(context_from_raw(raw, back, err), err);
    CHECK(back == ctx);
  }
}

TEST_CASE("FeedReader assigns arrival_seq as a bijection over records") {
  std::istringstream in(
      "# header comment\n"
      "r1,1,bus1,1,2,100\n"
      "\n"
      "not,even,close\n"
      "r1,1,bus2,1,2,200\n");
  FeedReader reader(in);
  FeedReader::Record rec;

  REQUIRE(reader.next(rec));
  CHECK_FALSE(rec.malformed);
  CHECK(rec.tuple.arrival_seq == 0);

  REQUIRE(reader.next(rec));  // malformed line: surfaced, no sequence number
  CHECK(rec.malformed);
  CHECK_FALSE(rec.error.empty());

  REQUIRE(reader.next(rec));
  CHECK_FALSE(rec.malformed);
  CHECK(rec.tuple.arrival_seq == 1);

  CHECK_FALSE(reader.next(rec));
  CHECK(reader.issued() == 2);
}

TEST_CASE("serialized doubles round-trip exactly") {
  Rng rng(7);
  for (int i = 0; i < 500; ++i) {
    double v = (rng.next_double() - 0.5) * 360.0;
    RawTuple t;
    t.route_id = "r";
    t.route_number = "1";
    t.vehicle_id = "b";
    t.lat = v;
    t.lon = 0.0;
    t.ts_ms = 0;
    RawTuple back;
    std::string err;
    REQUIRE(parse_tuple(serialize_tuple(t), back, err));
    CHECK(*back.lat == v);
  }
}
