#include "tensorm/encode.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <string_view>

#include "tensorm/error.hpp"

namespace tensorm {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

/// Splits one CSV record; double-quoted fields may contain commas and "".
std::vector<std::string> split_csv(std::string_view line, const std::string& where) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    bool was_quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                field += '"';
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                field += ch;
            }
        } else if (ch == '"' && trim(field).empty()) {
            quoted = true;
            was_quoted = true;
            field.clear();
        } else if (ch == ',') {
            fields.push_back(was_quoted ? field : std::string(trim(field)));
            field.clear();
            was_quoted = false;
        } else {
            field += ch;
        }
    }
    if (quoted)
        throw ParseError("unterminated quoted field", where);
    fields.push_back(was_quoted ? field : std::string(trim(field)));
    return fields;
}

} // namespace

ContinuousMatrix ContinuousMatrix::from_values(std::size_t rows, std::size_t cols, std::vector<double> values,
                                               std::vector<std::uint8_t> missing) {
    if (values.size() != rows * cols)
        throw ArgumentError("matrix payload does not match its shape");
    if (missing.empty())
        missing.assign(values.size(), 0);
    if (missing.size() != values.size())
        throw ArgumentError("missing mask does not match the matrix shape");
    ContinuousMatrix m;
    m.rows = rows;
    m.cols = cols;
    m.values = std::move(values);
    m.missing = std::move(missing);
    for (std::size_t r = 0; r < rows; ++r)
        m.object_ids.push_back(std::to_string(r));
    for (std::size_t c = 0; c < cols; ++c)
        m.attribute_names.push_back(std::to_string(c));
    return m;
}

ContinuousMatrix read_matrix_csv(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    ContinuousMatrix m;

    while (std::getline(in, line)) {
        ++line_no;
        if (!trim(line).empty())
            break;
    }
    if (trim(line).empty())
        throw ParseError("empty CSV input", "line 1");
    auto header = split_csv(line, "line " + std::to_string(line_no));
    if (header.size() < 2)
        throw ParseError("header needs an id column and at least one attribute", "line " + std::to_string(line_no));
    m.attribute_names.assign(header.begin() + 1, header.end());
    m.cols = m.attribute_names.size();

    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty())
            continue;
        const auto where = "line " + std::to_string(line_no);
        const auto fields = split_csv(line, where);
        if (fields.size() != m.cols + 1)
            throw ParseError("expected " + std::to_string(m.cols + 1) + " fields, got " + std::to_string(fields.size()),
                             where);
        m.object_ids.push_back(fields[0]);
        for (std::size_t c = 0; c < m.cols; ++c) {
            const auto& cell = fields[c + 1];
            if (cell.empty()) {
                m.values.push_back(0.0);
                m.missing.push_back(1);
                continue;
            }
            double value = 0.0;
            const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
            if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(value))
                throw ParseError("cannot parse '" + cell + "' as a number in column '" + m.attribute_names[c] + "'",
                                 where);
            m.values.push_back(value);
            m.missing.push_back(0);
        }
    }
    m.rows = m.object_ids.size();
    return m;
}

ContinuousMatrix zscore_normalize(const ContinuousMatrix& m) {
    ContinuousMatrix out = m;
    for (std::size_t c = 0; c < m.cols; ++c) {
        std::size_t count = 0;
        double sum = 0.0;
        for (std::size_t r = 0; r < m.rows; ++r)
            if (!m.is_missing(r, c)) {
                sum += m.at(r, c);
                ++count;
            }
        const auto& name = m.attribute_names.at(c);
        if (count < 2)
            throw ArgumentError("attribute '" + name + "' has fewer than two observed values");
        const double mean = sum / static_cast<double>(count);
        double squares = 0.0;
        for (std::size_t r = 0; r < m.rows; ++r)
            if (!m.is_missing(r, c))
                squares += (m.at(r, c) - mean) * (m.at(r, c) - mean);
        const double sd = std::sqrt(squares / static_cast<double>(count - 1));
        if (!(sd > 0.0))
            throw ArgumentError("attribute '" + name + "' has zero variance");
        for (std::size_t r = 0; r < m.rows; ++r)
            if (!m.is_missing(r, c))
                out.values[r * m.cols + c] = (m.at(r, c) - mean) / sd;
    }
    return out;
}

ObservedTensor relational_encode(const ContinuousMatrix& m, double tie_epsilon) {
    if (m.cols < 2)
        throw ArgumentError("relational encoding needs at least two attributes");
    if (m.rows < 1)
        throw ArgumentError("relational encoding needs at least one object");
    if (!(tie_epsilon >= 0.0))
        throw ArgumentError("tie epsilon must be non-negative");

    const std::size_t g = m.cols;
    std::vector<std::int8_t> entries(m.rows * g * g, kMissing);
    for (std::size_t o = 0; o < m.rows; ++o) {
        std::int8_t* slice = entries.data() + o * g * g;
        for (std::size_t i = 0; i < g; ++i) {
            if (m.is_missing(o, i))
                continue;
            for (std::size_t j = 0; j < g; ++j) {
                if (i == j || m.is_missing(o, j))
                    continue;
                const double diff = m.at(o, i) - m.at(o, j);
                if (diff > tie_epsilon)
                    slice[i * g + j] = kObservedOne;
                else if (diff < -tie_epsilon)
                    slice[i * g + j] = kObservedZero;
            }
        }
    }
    return ObservedTensor({m.rows, g, g}, std::move(entries));
}

void write_name_map(std::ostream& out, const ContinuousMatrix& m) {
    for (std::size_t r = 0; r < m.object_ids.size(); ++r)
        out << "object\t" << r << '\t' << m.object_ids[r] << '\n';
    for (std::size_t c = 0; c < m.attribute_names.size(); ++c)
        out << "attribute\t" << c << '\t' << m.attribute_names[c] << '\n';
}

} // namespace tensorm
