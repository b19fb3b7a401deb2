#include "tensorm/tensor_io.hpp"

#include <array>
#include <charconv>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>

#include "tensorm/error.hpp"

namespace tensorm {

namespace {

constexpr std::string_view kMagic = "BTNSR1";

void put_u32(std::ostream& out, std::uint32_t v) {
    const std::array<char, 4> bytes{static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                                    static_cast<char>((v >> 16) & 0xff),
                                    static_cast<char>((v >> 24) & 0xff)};
    out.write(bytes.data(), bytes.size());
}

std::uint32_t get_u32(std::istream& in, std::size_t& offset) {
    std::array<unsigned char, 4> bytes{};
    in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
    if (in.gcount() != 4)
        throw ParseError("truncated header", "byte " + std::to_string(offset));
    offset += 4;
    return static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
           (static_cast<std::uint32_t>(bytes[2]) << 16) | (static_cast<std::uint32_t>(bytes[3]) << 24);
}

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> tokens;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r'))
            ++i;
        const auto start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r')
            ++i;
        if (i > start)
            tokens.push_back(line.substr(start, i - start));
    }
    return tokens;
}

std::size_t parse_size(std::string_view token, const std::string& where) {
    std::size_t value = 0;
    const auto* end = token.data() + token.size();
    const auto [ptr, ec] = std::from_chars(token.data(), end, value);
    if (ec != std::errc() || ptr != end)
        throw ParseError("expected a non-negative integer, got '" + std::string(token) + "'", where);
    return value;
}

bool next_content_line(std::istream& in, std::string& line, std::size_t& line_no) {
    while (std::getline(in, line)) {
        ++line_no;
        if (!split_ws(line).empty())
            return true;
    }
    return false;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot open '" + path.string() + "' for writing");
    return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out)
        throw IoError("failed writing '" + path.string() + "'");
}

} // namespace

void save_dense(std::ostream& out, const ObservedTensor& t) {
    out.write(kMagic.data(), static_cast<std::streamsize>(kMagic.size()));
    put_u32(out, static_cast<std::uint32_t>(t.order()));
    for (auto n : t.dims()) {
        if (n > std::numeric_limits<std::uint32_t>::max())
            throw ArgumentError("extent " + std::to_string(n) + " does not fit the dense format");
        put_u32(out, static_cast<std::uint32_t>(n));
    }
    const auto entries = t.entries();
    out.write(reinterpret_cast<const char*>(entries.data()), static_cast<std::streamsize>(entries.size()));
}

ObservedTensor load_dense(std::istream& in) {
    std::array<char, kMagic.size()> magic{};
    in.read(magic.data(), magic.size());
    if (in.gcount() != static_cast<std::streamsize>(magic.size()) ||
        std::string_view(magic.data(), magic.size()) != kMagic)
        throw ParseError("missing BTNSR1 magic", "byte 0");
    std::size_t offset = kMagic.size();

    const auto order = get_u32(in, offset);
    if (order < 2)
        throw ParseError("tensor order " + std::to_string(order) + " is below 2", "byte 6");
    Extents dims(order);
    std::size_t total = 1;
    for (auto& n : dims) {
        const auto at = offset;
        n = get_u32(in, offset);
        if (n == 0)
            throw ParseError("zero extent", "byte " + std::to_string(at));
        if (total > std::numeric_limits<std::size_t>::max() / n)
            throw ParseError("extents overflow", "byte " + std::to_string(at));
        total *= n;
    }

    std::vector<std::int8_t> entries(total);
    in.read(reinterpret_cast<char*>(entries.data()), static_cast<std::streamsize>(total));
    if (static_cast<std::size_t>(in.gcount()) != total)
        throw ParseError("payload truncated: expected " + std::to_string(total) + " bytes, got " +
                             std::to_string(in.gcount()),
                         "byte " + std::to_string(offset + static_cast<std::size_t>(in.gcount())));
    for (std::size_t i = 0; i < total; ++i)
        if (entries[i] < -1 || entries[i] > 1)
            throw ParseError("entry value " + std::to_string(entries[i]) + " not in {-1, 0, 1}",
                             "byte " + std::to_string(offset + i));
    if (in.peek() != std::char_traits<char>::eof())
        throw ParseError("trailing bytes after payload", "byte " + std::to_string(offset + total));
    return ObservedTensor(std::move(dims), std::move(entries));
}

void save_sparse(std::ostream& out, const ObservedTensor& t, SparseDefault unlisted) {
    if (unlisted == SparseDefault::Zero && t.count_missing() != 0)
        throw ArgumentError("a zero-default sparse file cannot represent missing entries");

    out << "dims:";
    for (auto n : t.dims())
        out << ' ' << n;
    out << "\ndefault: " << (unlisted == SparseDefault::Missing ? "missing" : "zero") << '\n';

    const auto dims = t.dims();
    Index idx(dims.size(), 0);
    for (std::size_t offset = 0; offset < t.size(); ++offset) {
        const auto v = t[offset];
        const bool listed = unlisted == SparseDefault::Missing ? v != kMissing : v == kObservedOne;
        if (listed) {
            for (auto i : idx)
                out << i << ' ';
            out << (v == kObservedOne ? '1' : '0') << '\n';
        }
        for (std::size_t k = dims.size(); k-- > 0;) {
            if (++idx[k] < dims[k])
                break;
            idx[k] = 0;
        }
    }
}

ObservedTensor load_sparse(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;

    if (!next_content_line(in, line, line_no))
        throw ParseError("empty sparse tensor file", "line 1");
    auto tokens = split_ws(line);
    if (tokens.front() != "dims:")
        throw ParseError("expected 'dims: N1 ... NK'", "line " + std::to_string(line_no));
    const auto where = "line " + std::to_string(line_no);
    Extents dims;
    for (std::size_t i = 1; i < tokens.size(); ++i) {
        dims.push_back(parse_size(tokens[i], where));
        if (dims.back() == 0)
            throw ParseError("zero extent", where);
    }
    if (dims.size() < 2)
        throw ParseError("a tensor needs at least 2 modes", where);

    if (!next_content_line(in, line, line_no))
        throw ParseError("missing 'default:' line", "line " + std::to_string(line_no + 1));
    tokens = split_ws(line);
    if (tokens.size() != 2 || tokens[0] != "default:" || (tokens[1] != "missing" && tokens[1] != "zero"))
        throw ParseError("expected 'default: missing|zero'", "line " + std::to_string(line_no));
    const auto fill = tokens[1] == "missing" ? kMissing : kObservedZero;

    std::vector<std::int8_t> entries(element_count(dims), fill);
    std::vector<bool> seen(entries.size(), false);
    Index idx(dims.size());
    while (next_content_line(in, line, line_no)) {
        const auto at = "line " + std::to_string(line_no);
        tokens = split_ws(line);
        if (tokens.size() != dims.size() + 1)
            throw ParseError("expected " + std::to_string(dims.size()) + " indices and a value", at);
        for (std::size_t k = 0; k < dims.size(); ++k) {
            idx[k] = parse_size(tokens[k], at);
            if (idx[k] >= dims[k])
                throw ParseError("index " + std::to_string(idx[k]) + " out of range for mode " +
                                     std::to_string(k),
                                 at);
        }
        const auto value = parse_size(tokens.back(), at);
        if (value > 1)
            throw ParseError("value must be 0 or 1, got " + std::string(tokens.back()), at);
        const auto offset = flat_offset(idx, dims);
        if (seen[offset])
            throw ParseError("duplicate entry", at);
        seen[offset] = true;
        entries[offset] = value == 1 ? kObservedOne : kObservedZero;
    }
    return ObservedTensor(std::move(dims), std::move(entries));
}

ObservedTensor load_tensor(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open '" + path.string() + "'");
    std::array<char, kMagic.size()> head{};
    in.read(head.data(), head.size());
    const bool dense = in.gcount() == static_cast<std::streamsize>(head.size()) &&
                       std::string_view(head.data(), head.size()) == kMagic;
    in.clear();
    in.seekg(0);
    try {
        return dense ? load_dense(in) : load_sparse(in);
    } catch (const ParseError& e) {
        throw ParseError(e.what(), path.string());
    }
}

void save_dense(const std::filesystem::path& path, const ObservedTensor& t) {
    auto out = open_out(path);
    save_dense(out, t);
    finish(out, path);
}

void save_sparse(const std::filesystem::path& path, const ObservedTensor& t, SparseDefault unlisted) {
    auto out = open_out(path);
    save_sparse(out, t, unlisted);
    finish(out, path);
}

} // namespace tensorm
