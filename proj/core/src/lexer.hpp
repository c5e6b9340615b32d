#pragma once

#include <cctype>
#include <string>
#include <vector>

#include "mpst/ast.hpp"

namespace mpst::detail {

struct Token {
  enum class Kind { Ident, Int, Punct, End };
  Kind kind = Kind::End;
  std::string text;
  long value = 0;
  int line = 1;
  int col = 1;
};

class Lexer {
 public:
  explicit Lexer(const std::string& src) : src_(src) { advance(); }

  const Token& peek() const { return tok_; }

  Token next() {
    Token t = tok_;
    advance();
    return t;
  }

  bool at_end() const { return tok_.kind == Token::Kind::End; }

  bool is_punct(const std::string& p) const {
    return tok_.kind == Token::Kind::Punct && tok_.text == p;
  }

  bool is_ident(const std::string& id) const {
    return tok_.kind == Token::Kind::Ident && tok_.text == id;
  }

  void expect_punct(const std::string& p) {
    if (!is_punct(p)) fail("expected '" + p + "'");
    advance();
  }

  std::string expect_ident() {
    if (tok_.kind != Token::Kind::Ident) fail("expected identifier");
    std::string s = tok_.text;
    advance();
    return s;
  }

  long expect_int() {
    if (tok_.kind != Token::Kind::Int) fail("expected integer");
    long v = tok_.value;
    advance();
    return v;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(tok_.line, tok_.col, msg + " (got '" + describe() + "')");
  }

 private:
  std::string describe() const {
    if (tok_.kind == Token::Kind::End) return "<eof>";
    return tok_.text;
  }

  void advance() {
    skip_ws();
    tok_.line = line_;
    tok_.col = col_;
    if (pos_ >= src_.size()) {
      tok_ = {Token::Kind::End, "", 0, line_, col_};
      return;
    }
    char c = src_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '#') {
      std::string id;
      while (pos_ < src_.size()) {
        char d = src_[pos_];
        if (std::isalnum(static_cast<unsigned char>(d)) || d == '_' || d == '\'' ||
            (id.empty() && d == '#')) {
          id += d;
          bump();
        } else {
          break;
        }
      }
      tok_ = {Token::Kind::Ident, id, 0, tok_.line, tok_.col};
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      long v = 0;
      std::string text;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        v = v * 10 + (src_[pos_] - '0');
        text += src_[pos_];
        bump();
      }
      tok_ = {Token::Kind::Int, text, v, tok_.line, tok_.col};
      return;
    }
    // multi-char puncts
    static const char* puncts[] = {"(+)", "->", "=="};
    for (const char* p : puncts) {
      size_t n = std::char_traits<char>::length(p);
      if (src_.compare(pos_, n, p) == 0) {
        for (size_t i = 0; i < n; ++i) bump();
        tok_ = {Token::Kind::Punct, p, 0, tok_.line, tok_.col};
        return;
      }
    }
    std::string p(1, c);
    bump();
    tok_ = {Token::Kind::Punct, p, 0, tok_.line, tok_.col};
  }

  void skip_ws() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        bump();
      } else if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '/') {
        while (pos_ < src_.size() && src_[pos_] != '\n') bump();
      } else {
        break;
      }
    }
  }

  void bump() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  std::string src_;
  size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
  Token tok_;
};

}  // namespace mpst::detail
