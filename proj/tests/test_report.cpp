#include <gtest/gtest.h>

#include <sstream>
#include <string>

#include "carousel/report.hpp"

using namespace carousel::report;

namespace {

Report sample_report()
{
    Report r;
    r.set_header("tool_version", kToolVersion);
    r.set_header("command", "limit");
    r.set_columns({"quantity", "argument", "value", "flag"});
    r.add_row({std::string("P"), std::int64_t{1}, 0.33027650741290394919, true});
    r.add_row({std::string("a,b \"c\""), std::int64_t{-2}, 1e-300, false});
    return r;
}

} // namespace

TEST(FormatDouble, TwelveSignificantDigits)
{
    EXPECT_EQ(format_double(0.1), "0.1");
    EXPECT_EQ(format_double(1.0 / 3.0), "0.333333333333");
    EXPECT_EQ(format_double(2.0), "2");
    EXPECT_EQ(format_double(1.5e-20), "1.5e-20");
    EXPECT_EQ(format_double(std::numeric_limits<double>::infinity()), "inf");
    EXPECT_EQ(round_significant(1.0 / 3.0), 0.333333333333);
}

TEST(Report, CsvLayout)
{
    std::ostringstream os;
    sample_report().write_csv(os);
    EXPECT_EQ(os.str(), "# tool_version=1.0.0\n"
                        "# command=limit\n"
                        "quantity,argument,value,flag\n"
                        "P,1,0.330276507413,true\n"
                        "\"a,b \"\"c\"\"\",-2,1e-300,false\n");
}

TEST(Report, HeaderKeysKeepFirstPosition)
{
    Report r;
    r.set_header("a", "1");
    r.set_header("b", "2");
    r.set_header("a", "3");
    ASSERT_EQ(r.header().size(), 2u);
    EXPECT_EQ(r.header()[0].first, "a");
    EXPECT_EQ(r.header()[0].second, "3");
}

TEST(Report, RowWidthIsChecked)
{
    Report r;
    r.set_columns({"x", "y"});
    EXPECT_THROW(r.add_row({1.0}), std::logic_error);
}

TEST(Report, JsonCarriesSameNumbersAsCsv)
{
    const auto r = sample_report();
    const auto doc = nlohmann::ordered_json::parse([&] {
        std::ostringstream os;
        r.write_json(os);
        return os.str();
    }());
    EXPECT_EQ(doc["header"]["command"], "limit");
    ASSERT_EQ(doc["rows"].size(), 2u);
    EXPECT_EQ(doc["rows"][0]["quantity"], "P");
    EXPECT_EQ(doc["rows"][0]["argument"], 1);
    EXPECT_EQ(doc["rows"][0]["flag"], true);
    EXPECT_EQ(doc["rows"][1]["quantity"], "a,b \"c\"");
    // The JSON double parses to the same value as the CSV text.
    EXPECT_EQ(doc["rows"][0]["value"].get<double>(), std::stod(format_double(0.33027650741290394919)));
    EXPECT_EQ(doc["rows"][1]["value"].get<double>(), 1e-300);
    // Column order survives.
    auto it = doc["rows"][0].begin();
    EXPECT_EQ(it.key(), "quantity");
}

TEST(Report, FormatParsing)
{
    EXPECT_EQ(parse_format("csv"), Format::csv);
    EXPECT_EQ(parse_format("json"), Format::json);
    EXPECT_THROW(parse_format("xml"), std::invalid_argument);
}
