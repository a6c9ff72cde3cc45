#include "jslight/tokenizer.hpp"

#include <algorithm>
#include <array>

namespace jslight {

namespace {

constexpr std::array<std::string_view, 46> kReserved = {
    "await",  "break",    "case",       "catch",  "class",     "const",  "continue", "debugger",
    "default", "delete",  "do",         "else",   "enum",      "export", "extends",  "false",
    "finally", "for",     "function",   "if",     "import",    "in",     "instanceof", "new",
    "null",   "return",   "super",      "switch", "this",      "throw",  "true",     "try",
    "typeof", "var",      "void",       "while",  "with",      "yield",  "let",      "static",
    "implements", "interface", "package", "private", "protected", "public",
};

// Keywords after which a `/` starts a regex literal rather than a division.
constexpr std::array<std::string_view, 14> kRegexAfterKeyword = {
    "return", "typeof", "case", "do",    "else",  "in",    "instanceof",
    "new",    "delete", "void", "throw", "yield", "await", "of",
};

bool is_reserved(std::string_view word) {
    return std::find(kReserved.begin(), kReserved.end(), word) != kReserved.end();
}

bool ident_start(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c == '$';
}

bool ident_part(unsigned char c) { return ident_start(c) || (c >= '0' && c <= '9'); }

// Non-ASCII code points count as identifier characters except Unicode
// spaces, general punctuation, BOM and the replacement character.
bool non_ascii_ident(char32_t cp) {
    if (cp == 0xA0 || cp == 0x1680 || cp == 0x3000 || cp == 0xFEFF || cp == 0xFFFD) return false;
    if (cp >= 0x2000 && cp <= 0x206F && cp != 0x200C && cp != 0x200D) return false;
    return cp >= 0x80;
}

// Byte length of the identifier character at `i`, or 0. Expects valid UTF-8.
std::size_t ident_width(std::string_view s, std::size_t i, bool start) {
    const auto c = static_cast<unsigned char>(s[i]);
    if (c < 0x80) return (start ? ident_start(c) : ident_part(c)) ? 1 : 0;
    std::size_t n = c >= 0xF0 ? 4 : c >= 0xE0 ? 3 : c >= 0xC0 ? 2 : 0;
    if (n == 0 || i + n > s.size()) return 0;
    char32_t cp = c & (0x7F >> n);
    for (std::size_t k = 1; k < n; ++k) cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
    return non_ascii_ident(cp) ? n : 0;
}

bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }

bool is_line_terminator(char c) { return c == '\n' || c == '\r'; }

// What the previous significant token was; decides how `/` lexes.
enum class Prev {
    none,        // start of input
    expr_end,    // identifier, number, string, `)`, `]`, `}`, regex: `/` divides
    op,          // punctuator: `/` starts a regex
    keyword_re,  // keyword after which an expression starts
};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    std::vector<std::string> run() {
        if (src_.starts_with("#!")) skip_line();
        while (pos_ < src_.size()) step();
        return std::move(out_);
    }

private:
    std::string_view src_;
    std::size_t pos_ = 0;
    Prev prev_ = Prev::none;
    bool after_dot_ = false;
    // One entry per open `{`; true marks the brace that opened a template
    // interpolation, whose matching `}` resumes the template text.
    std::vector<bool> braces_;
    std::vector<std::string> out_;

    char peek(std::size_t ahead = 0) const {
        return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
    }

    void skip_line() {
        while (pos_ < src_.size() && !is_line_terminator(src_[pos_])) ++pos_;
    }

    void skip_block_comment() {
        const auto end = src_.find("*/", pos_ + 2);
        pos_ = end == std::string_view::npos ? src_.size() : end + 2;
    }

    void skip_string(char quote) {
        ++pos_;
        while (pos_ < src_.size()) {
            const char c = src_[pos_];
            if (c == '\\') {
                pos_ += 2;
                continue;
            }
            ++pos_;
            if (c == quote || is_line_terminator(c)) return;
        }
        pos_ = std::min(pos_, src_.size());
    }

    // Consumes template text up to and including the closing backtick or the
    // `${` that opens an interpolation.
    void skip_template_text() {
        while (pos_ < src_.size()) {
            const char c = src_[pos_];
            if (c == '\\') {
                pos_ += 2;
                continue;
            }
            if (c == '`') {
                ++pos_;
                prev_ = Prev::expr_end;
                return;
            }
            if (c == '$' && peek(1) == '{') {
                pos_ += 2;
                braces_.push_back(true);
                prev_ = Prev::op;
                return;
            }
            ++pos_;
        }
        pos_ = std::min(pos_, src_.size());
    }

    void skip_number() {
        const std::size_t start = pos_;
        const bool hex = src_[pos_] == '0' && (peek(1) == 'x' || peek(1) == 'X');
        ++pos_;
        while (pos_ < src_.size()) {
            const auto c = static_cast<unsigned char>(src_[pos_]);
            const char before = src_[pos_ - 1];
            if (ident_part(c) || c == '.') {
                ++pos_;
            } else if ((c == '+' || c == '-') && !hex && pos_ > start &&
                       (before == 'e' || before == 'E')) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    // Returns false (leaving pos_ untouched) when no closing `/` is found on
    // the same line, so the caller can fall back to division.
    bool try_skip_regex() {
        std::size_t i = pos_ + 1;
        bool in_class = false;
        while (i < src_.size()) {
            const char c = src_[i];
            if (is_line_terminator(c)) return false;
            if (c == '\\') {
                i += 2;
                continue;
            }
            if (in_class) {
                if (c == ']') in_class = false;
            } else if (c == '[') {
                in_class = true;
            } else if (c == '/') {
                ++i;
                while (i < src_.size() && ident_part(static_cast<unsigned char>(src_[i]))) ++i;
                pos_ = i;
                return true;
            }
            ++i;
        }
        return false;
    }

    void emit_word(std::string_view word) {
        const bool property = after_dot_;
        after_dot_ = false;
        if (property) {
            out_.emplace_back(word);
            prev_ = Prev::expr_end;
            return;
        }
        if (is_reserved(word)) {
            const bool re = std::find(kRegexAfterKeyword.begin(), kRegexAfterKeyword.end(), word) !=
                            kRegexAfterKeyword.end();
            prev_ = re ? Prev::keyword_re : Prev::expr_end;
            if (word == "this" || word == "super" || word == "null" || word == "true" ||
                word == "false") {
                prev_ = Prev::expr_end;
            }
            return;
        }
        out_.emplace_back(word);
        prev_ = Prev::expr_end;
    }

    void step() {
        const char c = src_[pos_];
        const auto uc = static_cast<unsigned char>(c);

        if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
            ++pos_;
            return;
        }
        if (c == '/' && peek(1) == '/') {
            skip_line();
            return;
        }
        if (c == '/' && peek(1) == '*') {
            skip_block_comment();
            return;
        }
        // HTML-like comments are line comments in classic scripts.
        if (c == '<' && src_.substr(pos_).starts_with("<!--")) {
            skip_line();
            return;
        }
        if (c == '-' && src_.substr(pos_).starts_with("-->") && prev_ == Prev::none) {
            skip_line();
            return;
        }
        if (const std::size_t w = ident_width(src_, pos_, true)) {
            const std::size_t start = pos_;
            pos_ += w;
            while (pos_ < src_.size()) {
                const std::size_t more = ident_width(src_, pos_, false);
                if (more == 0) break;
                pos_ += more;
            }
            emit_word(src_.substr(start, pos_ - start));
            return;
        }
        if (c == '#') {
            // Private member names (`#field`) are not API references.
            ++pos_;
            while (pos_ < src_.size()) {
                const std::size_t more = ident_width(src_, pos_, false);
                if (more == 0) break;
                pos_ += more;
            }
            after_dot_ = false;
            prev_ = Prev::expr_end;
            return;
        }
        if (is_digit(uc) || (c == '.' && is_digit(static_cast<unsigned char>(peek(1))))) {
            skip_number();
            after_dot_ = false;
            prev_ = Prev::expr_end;
            return;
        }
        if (c == '"' || c == '\'') {
            skip_string(c);
            after_dot_ = false;
            prev_ = Prev::expr_end;
            return;
        }
        if (c == '`') {
            ++pos_;
            after_dot_ = false;
            skip_template_text();
            return;
        }
        if (c == '/') {
            const bool regex_ok = prev_ == Prev::none || prev_ == Prev::op || prev_ == Prev::keyword_re;
            after_dot_ = false;
            if (regex_ok && try_skip_regex()) {
                prev_ = Prev::expr_end;
                return;
            }
            ++pos_;
            prev_ = Prev::op;
            return;
        }
        if (c == '.') {
            // `...` spread is not member access.
            if (peek(1) == '.' && peek(2) == '.') {
                pos_ += 3;
                after_dot_ = false;
                prev_ = Prev::op;
                return;
            }
            ++pos_;
            after_dot_ = true;
            prev_ = Prev::op;
            return;
        }
        if (c == '?' && peek(1) == '.' && !is_digit(static_cast<unsigned char>(peek(2)))) {
            pos_ += 2;
            after_dot_ = true;
            prev_ = Prev::op;
            return;
        }
        if (c == '{') {
            ++pos_;
            braces_.push_back(false);
            after_dot_ = false;
            prev_ = Prev::op;
            return;
        }
        if (c == '}') {
            ++pos_;
            after_dot_ = false;
            const bool closes_interpolation = !braces_.empty() && braces_.back();
            if (!braces_.empty()) braces_.pop_back();
            if (closes_interpolation) {
                skip_template_text();
            } else {
                prev_ = Prev::expr_end;
            }
            return;
        }
        if (c == ')' || c == ']') {
            ++pos_;
            after_dot_ = false;
            prev_ = Prev::expr_end;
            return;
        }
        // Any other punctuator, or a stray byte.
        ++pos_;
        after_dot_ = false;
        prev_ = Prev::op;
    }
};

}  // namespace

std::string sanitize_utf8(std::string_view bytes) {
    static constexpr std::string_view kReplacement = "\xEF\xBF\xBD";
    std::string out;
    out.reserve(bytes.size());
    std::size_t i = 0;
    while (i < bytes.size()) {
        const auto c = static_cast<unsigned char>(bytes[i]);
        if (c < 0x80) {
            out.push_back(static_cast<char>(c));
            ++i;
            continue;
        }
        std::size_t len = 0;
        unsigned char lo = 0x80;
        unsigned char hi = 0xBF;
        if (c >= 0xC2 && c <= 0xDF) {
            len = 2;
        } else if (c >= 0xE0 && c <= 0xEF) {
            len = 3;
            if (c == 0xE0) lo = 0xA0;
            if (c == 0xED) hi = 0x9F;
        } else if (c >= 0xF0 && c <= 0xF4) {
            len = 4;
            if (c == 0xF0) lo = 0x90;
            if (c == 0xF4) hi = 0x8F;
        }
        bool ok = len > 0 && i + len <= bytes.size();
        for (std::size_t k = 1; ok && k < len; ++k) {
            const auto cc = static_cast<unsigned char>(bytes[i + k]);
            const unsigned char l = k == 1 ? lo : 0x80;
            const unsigned char h = k == 1 ? hi : 0xBF;
            ok = cc >= l && cc <= h;
        }
        if (ok) {
            out.append(bytes.substr(i, len));
            i += len;
        } else {
            out.append(kReplacement);
            ++i;
        }
    }
    return out;
}

std::vector<std::string> tokenize(std::string_view source) {
    const std::string clean = sanitize_utf8(source);
    return Lexer(clean).run();
}

}  // namespace jslight
