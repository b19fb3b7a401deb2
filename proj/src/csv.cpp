#include "tensorm/csv.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>
#include <string>

#include <fmt/format.h>

#include "tensorm/error.hpp"

namespace tensorm {

namespace {

void write_header(std::ostream& out, std::span<const int> labels) {
    for (std::size_t l = 0; l < labels.size(); ++l)
        out << (l ? "," : "") << 'l' << labels[l];
    out << '\n';
}

std::vector<std::string> split_commas(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        fields.push_back(line.substr(start, comma - start));
        if (comma == std::string::npos)
            return fields;
        start = comma + 1;
    }
}

} // namespace

void write_factor_csv(std::ostream& out, const FactorMatrix& f, std::span<const int> labels) {
    if (labels.size() != f.rank())
        throw ArgumentError("label count does not match factor rank");
    write_header(out, labels);
    for (std::size_t n = 0; n < f.rows(); ++n) {
        for (std::size_t l = 0; l < f.rank(); ++l)
            out << (l ? "," : "") << (f.get(n, l) ? '1' : '0');
        out << '\n';
    }
}

void write_mean_csv(std::ostream& out, const RealMatrix& mean, std::span<const int> labels) {
    if (labels.size() != mean.cols)
        throw ArgumentError("label count does not match factor rank");
    write_header(out, labels);
    for (std::size_t n = 0; n < mean.rows; ++n) {
        for (std::size_t l = 0; l < mean.cols; ++l)
            out << (l ? "," : "") << fmt::format("{}", mean(n, l));
        out << '\n';
    }
}

std::pair<FactorMatrix, std::vector<int>> read_factor_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line))
        throw ParseError("empty factor file", "line 1");
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    std::vector<int> labels;
    if (!line.empty()) {
        for (const auto& field : split_commas(line)) {
            int label = 0;
            const auto* end = field.data() + field.size();
            if (field.size() < 2 || field[0] != 'l' || std::from_chars(field.data() + 1, end, label).ptr != end)
                throw ParseError("bad column label '" + field + "'", "line 1");
            labels.push_back(label);
        }
    }

    std::vector<std::vector<bool>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty() && labels.empty()) {
            rows.emplace_back();
            continue;
        }
        if (line.empty())
            continue;
        const auto fields = split_commas(line);
        if (fields.size() != labels.size())
            throw ParseError("expected " + std::to_string(labels.size()) + " values", "line " + std::to_string(line_no));
        std::vector<bool> row;
        for (const auto& v : fields) {
            if (v != "0" && v != "1")
                throw ParseError("factor entries must be 0 or 1, got '" + v + "'", "line " + std::to_string(line_no));
            row.push_back(v == "1");
        }
        rows.push_back(std::move(row));
    }

    FactorMatrix f(rows.size(), labels.size());
    for (std::size_t n = 0; n < rows.size(); ++n)
        for (std::size_t l = 0; l < labels.size(); ++l)
            f.set(n, l, rows[n][l]);
    return {std::move(f), std::move(labels)};
}

void write_probability_csv(std::ostream& out, const Reconstruction& recon, const ObservedTensor* only_missing_in) {
    if (only_missing_in && !std::equal(recon.dims.begin(), recon.dims.end(), only_missing_in->dims().begin(),
                                       only_missing_in->dims().end()))
        throw ArgumentError("reconstruction and tensor have different extents");
    for (std::size_t k = 0; k < recon.dims.size(); ++k)
        out << 'i' << k << ',';
    out << "probability,prediction\n";

    Index idx(recon.dims.size(), 0);
    for (std::size_t offset = 0; offset < recon.probabilities.size(); ++offset) {
        if (!only_missing_in || (*only_missing_in)[offset] == kMissing) {
            for (auto i : idx)
                out << i << ',';
            out << fmt::format("{},{}\n", recon.probabilities[offset], recon.hard[offset] ? 1 : 0);
        }
        for (std::size_t k = idx.size(); k-- > 0;) {
            if (++idx[k] < recon.dims[k])
                break;
            idx[k] = 0;
        }
    }
}

} // namespace tensorm
