#pragma once

// Tabular reports with an ordered header, rendered as CSV or JSON.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

namespace carousel::report {

inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr int kSignificantDigits = 12;

using Cell = std::variant<std::int64_t, double, std::string, bool>;

enum class Format { csv, json };

inline Format parse_format(const std::string& text)
{
    if (text == "csv")
        return Format::csv;
    if (text == "json")
        return Format::json;
    throw std::invalid_argument("unknown format: " + text);
}

/// Shortest round-trip text of x rounded to 12 significant digits; locale independent.
inline std::string format_double(double x)
{
    if (std::isnan(x))
        return "nan";
    if (std::isinf(x))
        return x > 0 ? "inf" : "-inf";
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, kSignificantDigits);
    return std::string(buf, r.ptr);
}

/// x rounded to 12 significant digits, so JSON and CSV carry the same number.
inline double round_significant(double x)
{
    if (!std::isfinite(x))
        return x;
    const std::string s = format_double(x);
    double y = 0.0;
    std::from_chars(s.data(), s.data() + s.size(), y);
    return y;
}

class Report {
public:
    void set_header(const std::string& key, const std::string& value)
    {
        for (auto& [k, v] : header_) {
            if (k == key) {
                v = value;
                return;
            }
        }
        header_.emplace_back(key, value);
    }

    void set_columns(std::vector<std::string> columns) { columns_ = std::move(columns); }

    void add_row(std::vector<Cell> row)
    {
        if (row.size() != columns_.size())
            throw std::logic_error("report row width does not match the column count");
        rows_.push_back(std::move(row));
    }

    const std::vector<std::pair<std::string, std::string>>& header() const noexcept { return header_; }
    const std::vector<std::string>& columns() const noexcept { return columns_; }
    const std::vector<std::vector<Cell>>& rows() const noexcept { return rows_; }

    void write_csv(std::ostream& out) const
    {
        for (const auto& [k, v] : header_)
            out << "# " << k << '=' << v << '\n';
        for (std::size_t i = 0; i < columns_.size(); ++i)
            out << (i ? "," : "") << columns_[i];
        out << '\n';
        for (const auto& row : rows_) {
            for (std::size_t i = 0; i < row.size(); ++i)
                out << (i ? "," : "") << csv_cell(row[i]);
            out << '\n';
        }
    }

    nlohmann::ordered_json to_json() const
    {
        nlohmann::ordered_json doc;
        doc["header"] = nlohmann::ordered_json::object();
        for (const auto& [k, v] : header_)
            doc["header"][k] = v;
        doc["rows"] = nlohmann::ordered_json::array();
        for (const auto& row : rows_) {
            nlohmann::ordered_json obj = nlohmann::ordered_json::object();
            for (std::size_t i = 0; i < row.size(); ++i)
                obj[columns_[i]] = json_cell(row[i]);
            doc["rows"].push_back(std::move(obj));
        }
        return doc;
    }

    void write_json(std::ostream& out) const { out << to_json().dump(2) << '\n'; }

    void write(std::ostream& out, Format format) const
    {
        if (format == Format::csv)
            write_csv(out);
        else
            write_json(out);
    }

private:
    static std::string csv_cell(const Cell& c)
    {
        return std::visit(
            [](const auto& v) -> std::string {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, double>)
                    return format_double(v);
                else if constexpr (std::is_same_v<T, bool>)
                    return v ? "true" : "false";
                else if constexpr (std::is_same_v<T, std::string>)
                    return quote(v);
                else
                    return std::to_string(v);
            },
            c);
    }

    static nlohmann::ordered_json json_cell(const Cell& c)
    {
        return std::visit(
            [](const auto& v) -> nlohmann::ordered_json {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, double>) {
                    if (!std::isfinite(v))
                        return format_double(v);
                    return round_significant(v);
                } else {
                    return v;
                }
            },
            c);
    }

    static std::string quote(const std::string& s)
    {
        if (s.find_first_of(",\"\n") == std::string::npos)
            return s;
        std::string q = "\"";
        for (char ch : s) {
            if (ch == '"')
                q += '"';
            q += ch;
        }
        return q + '"';
    }

    std::vector<std::pair<std::string, std::string>> header_;
    std::vector<std::string> columns_;
    std::vector<std::vector<Cell>> rows_;
};

} // namespace carousel::report
