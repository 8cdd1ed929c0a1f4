#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "phyto/errors.hpp"
#include "phyto/text.hpp"
#include "phyto/utf8.hpp"

namespace phyto::xml {

// Small well-formedness-checking XML reader. It covers what the bulletin
// corpus needs: elements, attributes, comments, CDATA, processing
// instructions, a DOCTYPE prolog, the predefined entities and numeric
// character references. Unknown named entities pass through literally since
// pre-2015 files reference HTML entities without declaring them.
struct Element {
    std::string name;
    std::vector<std::variant<Element, std::string>> children;
};

namespace detail {

class Parser {
public:
    explicit Parser(std::string_view src) : src_(src) {}

    Element parse_document() {
        skip_prolog();
        if (eof() || peek() != '<') fail("expected root element");
        Element root = parse_element();
        skip_misc();
        if (!eof()) fail("content after root element");
        return root;
    }

private:
    [[noreturn]] void fail(const std::string& why) const {
        throw IngestError("parse", "XML error at byte " + std::to_string(pos_) + ": " + why);
    }

    bool eof() const { return pos_ >= src_.size(); }
    char peek() const { return src_[pos_]; }
    bool starts_with(std::string_view s) const { return src_.substr(pos_, s.size()) == s; }

    void skip_ws() {
        while (!eof() && (peek() == ' ' || peek() == '\t' || peek() == '\n' || peek() == '\r'))
            ++pos_;
    }

    void expect(char c) {
        if (eof() || peek() != c) fail(std::string("expected '") + c + "'");
        ++pos_;
    }

    void skip_until(std::string_view terminator, const char* what) {
        const std::size_t found = src_.find(terminator, pos_);
        if (found == std::string_view::npos) fail(std::string("unterminated ") + what);
        pos_ = found + terminator.size();
    }

    void skip_comment() { skip_until("-->", "comment"); }
    void skip_pi() { skip_until("?>", "processing instruction"); }

    void skip_doctype() {
        int depth = 0;
        while (!eof()) {
            const char c = src_[pos_++];
            if (c == '[') ++depth;
            else if (c == ']') --depth;
            else if (c == '>' && depth <= 0) return;
        }
        fail("unterminated DOCTYPE");
    }

    void skip_prolog() {
        for (;;) {
            skip_ws();
            if (starts_with("<?")) { pos_ += 2; skip_pi(); continue; }
            if (starts_with("<!--")) { pos_ += 4; skip_comment(); continue; }
            if (starts_with("<!DOCTYPE")) { pos_ += 9; skip_doctype(); continue; }
            return;
        }
    }

    void skip_misc() {
        for (;;) {
            skip_ws();
            if (starts_with("<!--")) { pos_ += 4; skip_comment(); continue; }
            if (starts_with("<?")) { pos_ += 2; skip_pi(); continue; }
            return;
        }
    }

    static bool is_name_char(char c) {
        return !(c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '>' || c == '/' ||
                 c == '=' || c == '<');
    }

    std::string parse_name() {
        const std::size_t begin = pos_;
        while (!eof() && is_name_char(peek())) ++pos_;
        if (pos_ == begin) fail("expected name");
        return std::string(src_.substr(begin, pos_ - begin));
    }

    void parse_attributes() {
        for (;;) {
            skip_ws();
            if (eof()) fail("unterminated start tag");
            if (peek() == '>' || peek() == '/') return;
            parse_name();
            skip_ws();
            expect('=');
            skip_ws();
            if (eof() || (peek() != '"' && peek() != '\'')) fail("attribute value must be quoted");
            const char quote = src_[pos_++];
            const std::size_t end = src_.find(quote, pos_);
            if (end == std::string_view::npos) fail("unterminated attribute value");
            pos_ = end + 1;
        }
    }

    void append_entity(std::string& out) {
        // pos_ is just past '&'
        const std::size_t semi = src_.find(';', pos_);
        if (semi == std::string_view::npos || semi - pos_ > 10) {
            out.push_back('&');  // bare ampersand, keep literally
            return;
        }
        const std::string_view body = src_.substr(pos_, semi - pos_);
        if (body == "amp") out.push_back('&');
        else if (body == "lt") out.push_back('<');
        else if (body == "gt") out.push_back('>');
        else if (body == "quot") out.push_back('"');
        else if (body == "apos") out.push_back('\'');
        else if (!body.empty() && body[0] == '#') {
            char32_t cp = 0;
            bool ok = body.size() > 1;
            if (body.size() > 2 && (body[1] == 'x' || body[1] == 'X')) {
                for (std::size_t i = 2; i < body.size() && ok; ++i) {
                    const char c = body[i];
                    cp <<= 4;
                    if (c >= '0' && c <= '9') cp |= char32_t(c - '0');
                    else if (c >= 'a' && c <= 'f') cp |= char32_t(c - 'a' + 10);
                    else if (c >= 'A' && c <= 'F') cp |= char32_t(c - 'A' + 10);
                    else ok = false;
                }
            } else {
                for (std::size_t i = 1; i < body.size() && ok; ++i) {
                    const char c = body[i];
                    if (c < '0' || c > '9') { ok = false; break; }
                    cp = cp * 10 + char32_t(c - '0');
                }
            }
            if (!ok || cp == 0 || cp > 0x10FFFF) {
                out.push_back('&');
                return;
            }
            utf8::append(out, cp);
        } else {
            out.push_back('&');  // undeclared entity, keep literally
            return;
        }
        pos_ = semi + 1;
    }

    Element parse_element() {
        expect('<');
        Element element;
        element.name = parse_name();
        parse_attributes();
        if (peek() == '/') {
            ++pos_;
            expect('>');
            return element;
        }
        expect('>');
        std::string pending_text;
        const auto flush_text = [&] {
            if (!pending_text.empty()) {
                element.children.emplace_back(std::move(pending_text));
                pending_text.clear();
            }
        };
        for (;;) {
            if (eof()) fail("unterminated element <" + element.name + ">");
            if (peek() == '<') {
                if (starts_with("</")) {
                    flush_text();
                    pos_ += 2;
                    const std::string closing = parse_name();
                    if (closing != element.name)
                        fail("mismatched </" + closing + ">, open element is <" + element.name +
                             ">");
                    skip_ws();
                    expect('>');
                    return element;
                }
                if (starts_with("<!--")) { pos_ += 4; skip_comment(); continue; }
                if (starts_with("<![CDATA[")) {
                    pos_ += 9;
                    const std::size_t end = src_.find("]]>", pos_);
                    if (end == std::string_view::npos) fail("unterminated CDATA");
                    pending_text.append(src_.substr(pos_, end - pos_));
                    pos_ = end + 3;
                    continue;
                }
                if (starts_with("<?")) { pos_ += 2; skip_pi(); continue; }
                flush_text();
                element.children.emplace_back(parse_element());
                continue;
            }
            if (peek() == '&') {
                ++pos_;
                append_entity(pending_text);
                continue;
            }
            pending_text.push_back(src_[pos_++]);
        }
    }

    std::string_view src_;
    std::size_t pos_ = 0;
};

inline void collect_text(const Element& element, std::string& out) {
    for (const auto& child : element.children) {
        if (std::holds_alternative<std::string>(child)) {
            out.append(std::get<std::string>(child));
            out.push_back(' ');
        } else {
            collect_text(std::get<Element>(child), out);
        }
    }
}

}  // namespace detail

inline Element parse(std::string_view source) {
    return detail::Parser(source).parse_document();
}

// Concatenated descendant text, markup stripped, whitespace normalized.
inline std::string text_content(const Element& element) {
    std::string raw;
    detail::collect_text(element, raw);
    return text::normalize_whitespace(raw);
}

inline std::string local_name_lower(const std::string& qualified) {
    const std::size_t colon = qualified.rfind(':');
    const std::string local = colon == std::string::npos ? qualified : qualified.substr(colon + 1);
    return utf8::canonical(local);
}

inline bool has_child_elements(const Element& element) {
    for (const auto& child : element.children) {
        if (std::holds_alternative<Element>(child)) return true;
    }
    return false;
}

}  // namespace phyto::xml
