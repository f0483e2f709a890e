#include "capalloc/csv.hpp"

#include <cstdio>
#include <cstdlib>

#include "capalloc/errors.hpp"

namespace capalloc
{

    void CsvWriter::row(std::span<const std::string> fields)
    {
        for (std::size_t i = 0; i < fields.size(); ++i)
        {
            if (i)
                out_ << ',';
            out_ << fields[i];
        }
        out_ << '\n';
    }

    std::string format_csv_double(double value)
    {
        char buffer[64];
        std::snprintf(buffer, sizeof(buffer), "%.12g", value);
        return buffer;
    }

    std::vector<std::string> split_csv_line(const std::string &line)
    {
        std::vector<std::string> out;
        std::string field;
        for (char c : line)
        {
            if (c == ',')
            {
                out.push_back(field);
                field.clear();
            }
            else if (c != '\r')
            {
                field.push_back(c);
            }
        }
        out.push_back(field);
        return out;
    }

    double parse_csv_double(const std::string &field, const std::string &context)
    {
        char *end = nullptr;
        double value = std::strtod(field.c_str(), &end);
        if (end == field.c_str() || (end && *end != '\0'))
            throw validation_error(context + ": cannot parse number '" + field + "'");
        return value;
    }

} // namespace capalloc
