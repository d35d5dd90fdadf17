#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "pmat/dataset.hpp"
#include "test_util.hpp"

using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using namespace pmat;

namespace {

Dataset parse_string(Dataset (*parser)(std::istream&), const std::string& text) {
  std::istringstream in(text);
  return parser(in);
}

std::multiset<std::string> triple_multiset(const Dataset& ds) {
  std::multiset<std::string> out;
  for (const auto& t : ds.triples)
    out.insert(t.user_id + "|" + t.item_id + "|" + detail::format_shortest(t.rating));
  return out;
}

}  // namespace

TEST_CASE("movielens parser") {
  SECTION("single line") {
    Dataset ds = parse_string(parse_movielens_1m, "1::1193::5::978300760\n");
    REQUIRE(ds.triples.size() == 1);
    CHECK(ds.triples[0] == RatingTriple{"1", "1193", 5.0});
    CHECK(ds.r_max == 5.0);
    CHECK(ds.r_min == 1.0);
  }

  SECTION("index dedup") {
    Dataset ds = parse_string(parse_movielens_1m, "1::10::5::0\n1::11::3::0\n");
    CHECK(ds.n_users() == 1);
    CHECK(ds.n_items() == 2);
    CHECK(ds.user_of("1") == 0);
    CHECK(ds.item_of("10") == 0);
    CHECK(ds.item_of("11") == 1);
  }

  SECTION("malformed lines carry the line number") {
    try {
      parse_string(parse_movielens_1m, "1::2::bad::0\n");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 1);
    }
    try {
      parse_string(parse_movielens_1m, "1::2::5::0\n1::3::9::0\n");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);  // rating outside 1..5
    }
    CHECK_THROWS_AS(parse_string(parse_movielens_1m, "1::2::5\n"), ParseError);
  }

  SECTION("empty input") {
    CHECK_THROWS_WITH(parse_string(parse_movielens_1m, ""), ContainsSubstring("empty dataset"));
  }

  SECTION("CRLF accepted") {
    Dataset ds = parse_string(parse_movielens_1m, "1::2::4::0\r\n");
    CHECK(ds.triples[0].rating == 4.0);
  }
}

TEST_CASE("comoda parser") {
  const std::string header = "userID,itemID,rating,age,sex\n";

  SECTION("context columns are ignored") {
    Dataset ds = parse_string(parse_comoda, header + "15,57,4,23,m\n");
    REQUIRE(ds.triples.size() == 1);
    CHECK(ds.triples[0] == RatingTriple{"15", "57", 4.0});
    CHECK(ds.skipped_rows == 0);
    CHECK(ds.r_max == 5.0);
  }

  SECTION("sentinel ratings are skipped and counted") {
    Dataset ds = parse_string(parse_comoda, header + "15,57,-1,23,m\n15,58,3,23,m\n");
    CHECK(ds.triples.size() == 1);
    CHECK(ds.skipped_rows == 1);
    // skipped rows register no ids
    CHECK_THROWS_AS(ds.item_of("57"), std::out_of_range);
  }

  SECTION("malformed rows are skipped and counted") {
    Dataset ds = parse_string(parse_comoda, header + "15,57,NA,23,m\n15,58,3,23,m\n");
    CHECK(ds.triples.size() == 1);
    CHECK(ds.skipped_rows == 1);
  }

  SECTION("missing column is a schema error naming the column") {
    try {
      parse_string(parse_comoda, "userID,itemID,age\n1,2,3\n");
      FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
      CHECK(e.column() == "rating");
    }
  }

  SECTION("header match is case-insensitive") {
    Dataset ds = parse_string(parse_comoda, "userid,ITEMID,Rating\n1,2,5\n");
    CHECK(ds.triples.size() == 1);
  }
}

TEST_CASE("generic csv parser") {
  SECTION("bounds are inferred") {
    Dataset ds = parse_string(parse_generic_csv, "user,item,rating\nu1,i1,3\n");
    REQUIRE(ds.triples.size() == 1);
    CHECK(ds.r_max == 3.0);
    CHECK(ds.r_min == 3.0);

    Dataset two = parse_string(parse_generic_csv, "user,item,rating\nu1,i1,2\nu1,i2,5\n");
    CHECK(two.r_max == 5.0);
    CHECK(two.r_min == 2.0);
  }

  SECTION("empty body") {
    CHECK_THROWS_WITH(parse_string(parse_generic_csv, "user,item,rating\n"),
                      ContainsSubstring("empty dataset"));
  }

  SECTION("header is mandatory") {
    CHECK_THROWS_AS(parse_string(parse_generic_csv, "a,b,c\n1,2,3\n"), SchemaError);
  }

  SECTION("malformed rows are strict errors") {
    try {
      parse_string(parse_generic_csv, "user,item,rating\nu1,i1,3\nu1,i2\n");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
    }
  }
}

TEST_CASE("generic csv round trip") {
  SECTION("hand-written file") {
    const std::string text = "user,item,rating\nu1,i1,3\nu2,i1,4.5\nu1,i2,1\n";
    Dataset ds = parse_string(parse_generic_csv, text);
    std::ostringstream out;
    write_generic_csv(ds, out);
    CHECK(out.str() == text);
    Dataset again = parse_string(parse_generic_csv, out.str());
    CHECK(again.triples == ds.triples);
    CHECK(again.user_index == ds.user_index);
    CHECK(again.item_index == ds.item_index);
    CHECK(again.r_max == ds.r_max);
    CHECK(again.r_min == ds.r_min);
  }

  SECTION("synthetic dataset survives a round trip") {
    Dataset ds = synth_zipf_dataset(40, 20, 5, 31);
    // the generator's bounds are realized in the data for this seed
    double max_seen = 0.0, min_seen = 6.0;
    for (const auto& t : ds.triples) {
      max_seen = std::max(max_seen, t.rating);
      min_seen = std::min(min_seen, t.rating);
    }
    REQUIRE(max_seen == ds.r_max);
    REQUIRE(min_seen == ds.r_min);

    std::ostringstream out;
    write_generic_csv(ds, out);
    std::istringstream in(out.str());
    Dataset again = parse_generic_csv(in);
    CHECK(again.triples == ds.triples);
    CHECK(again.user_index == ds.user_index);
    CHECK(again.item_index == ds.item_index);
    CHECK(again.r_max == ds.r_max);
    CHECK(again.r_min == ds.r_min);
  }
}

TEST_CASE("synthetic zipf dataset") {
  SECTION("sizes") {
    Dataset one = synth_zipf_dataset(1, 3, 1, 5);
    CHECK(one.triples.size() == 1);
    Dataset many = synth_zipf_dataset(10, 8, 8, 5);
    CHECK(many.triples.size() == 80);
  }

  SECTION("rating map before noise") {
    CHECK(synth_rating_for_rank(1) == 5.0);
    CHECK(synth_rating_for_rank(2) == 3.0);
    CHECK(synth_rating_for_rank(3) == 2.0);
    CHECK(synth_rating_for_rank(8) == 2.0);
    CHECK(synth_rating_for_rank(9) == 1.0);
    CHECK(synth_rating_for_rank(1000) == 1.0);
  }

  SECTION("ratings stay in bounds") {
    Dataset ds = synth_zipf_dataset(50, 30, 10, 77);
    for (const auto& t : ds.triples) {
      CHECK(t.rating >= 1.0);
      CHECK(t.rating <= 5.0);
    }
  }

  SECTION("items per user are distinct") {
    Dataset ds = synth_zipf_dataset(20, 10, 10, 3);
    std::map<std::string, std::multiset<std::string>> per_user;
    for (const auto& t : ds.triples) per_user[t.user_id].insert(t.item_id);
    for (const auto& [user, items] : per_user) {
      CHECK(items.size() == 10);
      CHECK(std::set<std::string>(items.begin(), items.end()).size() == 10);
    }
  }

  SECTION("deterministic per seed") {
    Dataset a = synth_zipf_dataset(30, 20, 5, 9);
    Dataset b = synth_zipf_dataset(30, 20, 5, 9);
    CHECK(a.triples == b.triples);
    Dataset c = synth_zipf_dataset(30, 20, 5, 10);
    CHECK(a.triples != c.triples);
  }

  SECTION("rank frequencies follow the zipf weights") {
    // 100k users x 1 draw over 3 ranks; expected (6/11, 3/11, 2/11)
    Dataset ds = synth_zipf_dataset(100000, 3, 1, 2024);
    std::map<std::string, double> freq;
    for (const auto& t : ds.triples) freq[t.item_id] += 1.0;
    for (auto& [item, f] : freq) f /= static_cast<double>(ds.triples.size());
    CHECK_THAT(freq["i1"], WithinAbs(6.0 / 11.0, 0.01));
    CHECK_THAT(freq["i2"], WithinAbs(3.0 / 11.0, 0.01));
    CHECK_THAT(freq["i3"], WithinAbs(2.0 / 11.0, 0.01));
  }

  CHECK_THROWS_AS(synth_zipf_dataset(5, 3, 4, 1), std::invalid_argument);
  CHECK_THROWS_AS(synth_zipf_dataset(0, 3, 1, 1), std::invalid_argument);
}

TEST_CASE("train test split") {
  Dataset ds = synth_zipf_dataset(500, 200, 20, 42);
  REQUIRE(ds.triples.size() == 10000);

  SECTION("fraction bounds") {
    CHECK_THROWS_AS(train_test_split(ds, 0.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(train_test_split(ds, 1.0, 1), std::invalid_argument);
  }

  SECTION("deterministic") {
    auto [tr1, te1] = train_test_split(ds, 0.2, 7);
    auto [tr2, te2] = train_test_split(ds, 0.2, 7);
    CHECK(tr1.triples == tr2.triples);
    CHECK(te1.triples == te2.triples);
  }

  SECTION("test size near the binomial expectation") {
    auto [train, test] = train_test_split(ds, 0.2, 7);
    CHECK(test.triples.size() >= 1800);
    CHECK(test.triples.size() <= 2200);
    CHECK(train.triples.size() + test.triples.size() == 10000);
  }

  SECTION("partition preserves the multiset of triples") {
    auto [train, test] = train_test_split(ds, 0.3, 11);
    auto combined = triple_multiset(train);
    auto test_set = triple_multiset(test);
    combined.insert(test_set.begin(), test_set.end());
    CHECK(combined == triple_multiset(ds));
  }

  SECTION("index maps and bounds are shared") {
    auto [train, test] = train_test_split(ds, 0.2, 7);
    CHECK(train.user_index == ds.user_index);
    CHECK(train.item_index == ds.item_index);
    CHECK(test.user_index == ds.user_index);
    CHECK(test.item_index == ds.item_index);
    CHECK(train.r_max == ds.r_max);
    CHECK(test.r_min == ds.r_min);
    for (const auto& t : test.triples) {
      CHECK(test.user_of(t.user_id) == ds.user_of(t.user_id));
      CHECK(test.item_of(t.item_id) == ds.item_of(t.item_id));
    }
  }

  SECTION("degenerate split is an error") {
    Dataset tiny = synth_zipf_dataset(1, 3, 1, 5);
    CHECK_THROWS_WITH(train_test_split(tiny, 0.5, 3), ContainsSubstring("degenerate split"));
  }
}

TEST_CASE("fixture files parse to the hand-counted contents") {
  SECTION("movielens fixture") {
    std::ifstream in(testutil::data_path("movielens_fixture.dat"), std::ios::binary);
    REQUIRE(in.is_open());
    Dataset ds = parse_movielens_1m(in);
    CHECK(ds.triples.size() == 20);
    CHECK(ds.n_users() == 5);
    CHECK(ds.n_items() == 16);
    CHECK(ds.r_max == 5.0);
    CHECK(ds.user_of("1") == 0);
    CHECK(ds.user_of("5") == 4);
    CHECK(ds.item_of("1193") == 0);
    CHECK(ds.item_of("2321") == 15);
    CHECK(ds.triples.front() == RatingTriple{"1", "1193", 5.0});
    CHECK(ds.triples.back() == RatingTriple{"5", "2321", 3.0});
  }

  SECTION("comoda fixture") {
    std::ifstream in(testutil::data_path("comoda_fixture.csv"), std::ios::binary);
    REQUIRE(in.is_open());
    Dataset ds = parse_comoda(in);
    CHECK(ds.triples.size() == 17);
    CHECK(ds.skipped_rows == 3);
    CHECK(ds.n_users() == 5);
    CHECK(ds.n_items() == 5);
    CHECK(ds.r_max == 5.0);
    CHECK(ds.user_of("15") == 0);
    CHECK(ds.user_of("8") == 4);
    CHECK(ds.item_of("57") == 0);
    CHECK(ds.item_of("33") == 4);
    CHECK(ds.triples.front() == RatingTriple{"15", "57", 4.0});
  }
}
