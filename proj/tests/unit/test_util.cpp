#include <cmath>
#include <limits>

#include "fixtures.hpp"
#include "tractflow/numeric/random.hpp"
#include "tractflow/util/digest.hpp"
#include "tractflow/util/table.hpp"

using namespace tractflow;

TEST(Table, DelimiterDetectionAndQuotes) {
  const Table t = parse_table("# comment\na;b;c\n1;\"x;y\";3\n\n4;5;6\n");
  EXPECT_EQ(t.delimiter, ';');
  EXPECT_EQ(t.columns, (std::vector<std::string>{"a", "b", "c"}));
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0][1], "x;y");
  EXPECT_EQ(t.column("c"), 2u);
  EXPECT_FALSE(t.column("d").has_value());
  EXPECT_EQ(parse_table("a\tb\n1\t2\n").delimiter, '\t');
}

TEST(Table, NumbersAndFiles) {
  EXPECT_EQ(parse_number(" 2.5 ", "f", 1, "c"), 2.5);
  EXPECT_ERRC(parse_number("abc", "f", 1, "c"), Errc::NonFiniteValue);
  EXPECT_ERRC(parse_number("inf", "f", 1, "c"), Errc::NonFiniteValue);
  EXPECT_ERRC(read_table("/nonexistent/file.csv"), Errc::MissingInput);
}

TEST(Table, FormatDoubleRoundTrips) {
  Rng r(1);
  for (int i = 0; i < 1000; ++i) {
    const double v = std::ldexp(r.uniform(-1, 1), static_cast<int>(r.below(200)) - 100);
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(2.0), "2");
}

TEST(Digest, KnownVectors) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_ERRC(file_sha256("/nonexistent/file"), Errc::MissingInput);
}
