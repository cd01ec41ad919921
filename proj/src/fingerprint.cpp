#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>

#include "slmsql/error.hpp"
#include "slmsql/executor.hpp"

namespace slmsql {

namespace {

constexpr double kRealScale = 1e6;

int type_rank(const Cell& c) {
    switch (c.index()) {
        case 0: return 0;
        case 1:
        case 2: return 1;
        case 3: return 2;
        default: return 3;
    }
}

long double as_number(const Cell& c) {
    if (const auto* i = std::get_if<std::int64_t>(&c)) return static_cast<long double>(*i);
    return static_cast<long double>(std::get<double>(c));
}

template <class T>
int three_way(const T& a, const T& b) {
    return a < b ? -1 : (b < a ? 1 : 0);
}

void append_cell(std::string& out, const Cell& c) {
    switch (c.index()) {
        case 0:
            out += 'N';
            break;
        case 1:
            out += 'I';
            out += std::to_string(std::get<std::int64_t>(c));
            out += ';';
            break;
        case 2: {
            char buf[64];
            const auto res = std::to_chars(buf, buf + sizeof buf, std::get<double>(c));
            out += 'F';
            out.append(buf, res.ptr);
            out += ';';
            break;
        }
        case 3: {
            const auto& s = std::get<std::string>(c);
            out += 'T';
            out += std::to_string(s.size());
            out += ':';
            out += s;
            break;
        }
        default: {
            const auto& b = std::get<Blob>(c);
            out += 'B';
            out += std::to_string(b.size());
            out += ':';
            out.append(b.begin(), b.end());
            break;
        }
    }
}

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

Cell normalize_cell(const Cell& cell) {
    const auto* d = std::get_if<double>(&cell);
    if (d == nullptr || !std::isfinite(*d)) return cell;
    const double rounded = std::round(*d * kRealScale) / kRealScale;
    if (std::floor(rounded) == rounded && std::fabs(rounded) < 9.2e18)
        return static_cast<std::int64_t>(rounded);
    return rounded;
}

int compare_cells(const Cell& a, const Cell& b) {
    const int ra = type_rank(a);
    const int rb = type_rank(b);
    if (ra != rb) return ra < rb ? -1 : 1;
    switch (ra) {
        case 0: return 0;
        case 1: {
            if (a.index() == 1 && b.index() == 1)
                return three_way(std::get<std::int64_t>(a), std::get<std::int64_t>(b));
            const int by_value = three_way(as_number(a), as_number(b));
            if (by_value != 0) return by_value;
            // Equal value, different storage: keep the order total.
            return three_way(a.index(), b.index());
        }
        case 2: return std::get<std::string>(a).compare(std::get<std::string>(b)) < 0
                           ? -1
                           : (std::get<std::string>(a) == std::get<std::string>(b) ? 0 : 1);
        default: return three_way(std::get<Blob>(a), std::get<Blob>(b));
    }
}

int compare_rows(const Row& a, const Row& b) {
    const std::size_t n = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (const int c = compare_cells(a[i], b[i]); c != 0) return c;
    }
    return three_way(a.size(), b.size());
}

std::string ResultFingerprint::digest_hex() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(digest));
    return buf;
}

ResultFingerprint normalize_rows(std::vector<Row> rows, std::size_t declared_columns,
                                 bool order_sensitive) {
    ResultFingerprint fp;
    fp.column_count = rows.empty() ? declared_columns : rows.front().size();
    fp.ordered = order_sensitive;
    for (auto& row : rows) {
        if (row.size() != fp.column_count)
            throw Error(ErrorCode::RaggedRows, "rows have differing arity");
        for (auto& cell : row) cell = normalize_cell(cell);
    }
    if (!order_sensitive) {
        std::sort(rows.begin(), rows.end(),
                  [](const Row& a, const Row& b) { return compare_rows(a, b) < 0; });
    }
    std::string& out = fp.canonical;
    out += order_sensitive ? 'O' : 'U';
    out += std::to_string(fp.column_count);
    out += '/';
    out += std::to_string(rows.size());
    out += '|';
    for (const auto& row : rows) {
        for (const auto& cell : row) append_cell(out, cell);
    }
    fp.digest = fnv1a(out);
    fp.rows = std::move(rows);
    return fp;
}

}  // namespace slmsql
