#pragma once

#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace capalloc
{

    /// Minimal CSV emission with deterministic number formatting, so that
    /// identical inputs produce byte-identical files.
    class CsvWriter
    {
    public:
        explicit CsvWriter(std::ostream &out) : out_(out) {}
        void row(std::span<const std::string> fields);
        void row(const std::vector<std::string> &fields)
        {
            row(std::span<const std::string>(fields));
        }

    private:
        std::ostream &out_;
    };

    /// Shortest-round-trip style formatting with up to 12 significant
    /// digits; fixed "%.12g" so reruns are byte-identical.
    std::string format_csv_double(double value);

    std::vector<std::string> split_csv_line(const std::string &line);
    double parse_csv_double(const std::string &field, const std::string &context);

} // namespace capalloc
