#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace lars::detail {

enum class Tok {
  End,
  Newline,
  LowerIdent,
  UpperIdent,
  Integer,
  LParen,
  RParen,
  LBracket,
  RBracket,
  Box,      // []
  Diamond,  // <>
  At,       // @
  Hash,     // #
  Comma,
  Dot,
  If,  // :-
  Less,
  LessEqual,
  Greater,
  GreaterEqual,
  Equal,
  NotEqual,
};

struct Token {
  Tok kind = Tok::End;
  std::string text;
  std::int64_t integer = 0;
  std::size_t line = 1;
  std::size_t column = 1;
};

// Hand-written scanner; `%` starts a comment. Newlines are reported only
// when `newlines` is set (stream files are line based).
class Lexer {
 public:
  Lexer(std::string_view text, bool newlines) : text_(text), newlines_(newlines) {}

  const Token& peek();
  Token next();
  std::size_t line() const { return line_; }

 private:
  Token scan();
  [[noreturn]] void fail(const std::string& message) const;

  std::string_view text_;
  bool newlines_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t column_ = 1;
  bool has_peek_ = false;
  Token peeked_;
};

const char* describe(Tok kind);

}  // namespace lars::detail
