#include "slmsql/text.hpp"

#include <algorithm>
#include <cctype>
#include <vector>

namespace slmsql::text {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool is_word(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}

bool iequals_at(std::string_view s, std::size_t pos, std::string_view word) {
    if (pos + word.size() > s.size()) return false;
    for (std::size_t i = 0; i < word.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(s[pos + i])) !=
            std::tolower(static_cast<unsigned char>(word[i])))
            return false;
    }
    return true;
}

bool keyword_at(std::string_view s, std::size_t pos, std::string_view word) {
    if (!iequals_at(s, pos, word)) return false;
    if (pos > 0 && is_word(s[pos - 1])) return false;
    const std::size_t after = pos + word.size();
    return after >= s.size() || !is_word(s[after]);
}

struct Fence {
    std::size_t open = 0;
    std::size_t content_begin = 0;
    std::size_t content_end = 0;
    std::size_t close_end = 0;
};

std::vector<Fence> find_fences(std::string_view s) {
    std::vector<Fence> out;
    std::size_t pos = 0;
    while ((pos = s.find("```", pos)) != std::string_view::npos) {
        Fence f;
        f.open = pos;
        std::size_t p = pos + 3;
        std::size_t q = p;
        while (q < s.size() && (is_word(s[q]) || s[q] == '-')) ++q;
        while (q < s.size() && (s[q] == ' ' || s[q] == '\t' || s[q] == '\r')) ++q;
        // A language tag only counts when the rest of the opener line is empty.
        if (q < s.size() && s[q] == '\n')
            p = q + 1;
        else if (q >= s.size())
            p = s.size();
        f.content_begin = p;
        const std::size_t close = s.find("```", p);
        if (close == std::string_view::npos) {
            f.content_end = s.size();
            f.close_end = s.size();
        } else {
            f.content_end = close;
            f.close_end = close + 3;
        }
        out.push_back(f);
        pos = f.close_end;
    }
    return out;
}

// End of the statement that starts at `start`, scanning SQL lexically.
// Returns {end_of_sql, end_of_span}.
std::pair<std::size_t, std::size_t> statement_extent(std::string_view s, std::size_t start) {
    int depth = 0;
    char quote = 0;
    std::size_t i = start;
    while (i < s.size()) {
        const char c = s[i];
        if (quote != 0) {
            if (c == quote) quote = 0;
            ++i;
            continue;
        }
        switch (c) {
            case '\'':
            case '"':
            case '`':
                quote = c;
                break;
            case '(':
                ++depth;
                break;
            case ')':
                if (--depth < 0) return {i, i};
                break;
            case ';':
                if (depth == 0) return {i, i + 1};
                break;
            case '<':
                if (i + 1 < s.size() && s[i + 1] == '/') return {i, i};
                break;
            case '\n': {
                std::size_t j = i + 1;
                while (j < s.size() && (s[j] == ' ' || s[j] == '\t' || s[j] == '\r')) ++j;
                if (j < s.size() && s[j] == '\n') return {i, i};
                if (s.compare(j, 3, "```") == 0) return {i, i};
                break;
            }
            default:
                break;
        }
        ++i;
    }
    return {s.size(), s.size()};
}

}  // namespace

std::string_view trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return s.substr(b, e - b);
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string collapse_whitespace(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (char c : trim(s)) {
        if (is_space(c)) {
            pending_space = true;
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(c);
    }
    return out;
}

bool starts_with_keyword(std::string_view s, std::string_view keyword) {
    const std::string_view t = trim(s);
    return keyword_at(t, 0, keyword);
}

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
    if (needle.empty()) return 0;
    std::size_t n = 0;
    std::size_t pos = 0;
    while ((pos = haystack.find(needle, pos)) != std::string_view::npos) {
        ++n;
        pos += needle.size();
    }
    return n;
}

std::string strip_markdown_fences(std::string_view s) {
    const auto fences = find_fences(s);
    if (fences.empty()) return std::string(trim(s));
    std::string out;
    std::size_t cursor = 0;
    for (const auto& f : fences) {
        out.append(s.substr(cursor, f.open - cursor));
        out.append(s.substr(f.content_begin, f.content_end - f.content_begin));
        cursor = f.close_end;
    }
    out.append(s.substr(cursor));
    return std::string(trim(out));
}

std::optional<SqlSpan> locate_final_sql(std::string_view s) {
    const auto fences = find_fences(s);
    for (auto it = fences.rbegin(); it != fences.rend(); ++it) {
        const auto body = trim(s.substr(it->content_begin, it->content_end - it->content_begin));
        if (body.empty()) continue;
        return SqlSpan{it->open, it->close_end, std::string(body), true};
    }

    std::optional<SqlSpan> last;
    std::size_t pos = 0;
    while (pos < s.size()) {
        std::size_t found = std::string_view::npos;
        for (std::size_t i = pos; i + 6 <= s.size(); ++i) {
            if (keyword_at(s, i, "select")) {
                found = i;
                break;
            }
        }
        if (found == std::string_view::npos) break;
        const auto [sql_end, span_end] = statement_extent(s, found);
        const auto body = trim(s.substr(found, sql_end - found));
        if (!body.empty()) last = SqlSpan{found, span_end, std::string(body), false};
        pos = std::max(span_end, found + 6);
    }
    return last;
}

std::string_view utf8_prefix(std::string_view s, std::size_t max_bytes) {
    if (s.size() <= max_bytes) return s;
    std::size_t cut = max_bytes;
    while (cut > 0 && (static_cast<unsigned char>(s[cut]) & 0xC0) == 0x80) --cut;
    return s.substr(0, cut);
}

}  // namespace slmsql::text
