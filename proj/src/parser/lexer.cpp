#include "lexer.hpp"

#include <cctype>
#include <limits>

#include "lars/error.hpp"

namespace lars::detail {

const char* describe(Tok kind) {
  switch (kind) {
    case Tok::End: return "end of input";
    case Tok::Newline: return "end of line";
    case Tok::LowerIdent: return "identifier";
    case Tok::UpperIdent: return "variable";
    case Tok::Integer: return "integer";
    case Tok::LParen: return "'('";
    case Tok::RParen: return "')'";
    case Tok::LBracket: return "'['";
    case Tok::RBracket: return "']'";
    case Tok::Box: return "'[]'";
    case Tok::Diamond: return "'<>'";
    case Tok::At: return "'@'";
    case Tok::Hash: return "'#'";
    case Tok::Comma: return "','";
    case Tok::Dot: return "'.'";
    case Tok::If: return "':-'";
    case Tok::Less: return "'<'";
    case Tok::LessEqual: return "'<='";
    case Tok::Greater: return "'>'";
    case Tok::GreaterEqual: return "'>='";
    case Tok::Equal: return "'='";
    case Tok::NotEqual: return "'!='";
  }
  return "token";
}

const Token& Lexer::peek() {
  if (!has_peek_) {
    peeked_ = scan();
    has_peek_ = true;
  }
  return peeked_;
}

Token Lexer::next() {
  if (has_peek_) {
    has_peek_ = false;
    return std::move(peeked_);
  }
  return scan();
}

void Lexer::fail(const std::string& message) const { throw ParseError(message, line_, column_); }

Token Lexer::scan() {
  for (;;) {
    if (pos_ >= text_.size()) return Token{Tok::End, "", 0, line_, column_};
    char c = text_[pos_];
    if (c == '\n') {
      Token t{Tok::Newline, "\n", 0, line_, column_};
      ++pos_;
      ++line_;
      column_ = 1;
      if (newlines_) return t;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++pos_;
      ++column_;
      continue;
    }
    if (c == '%') {
      while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      continue;
    }
    break;
  }

  Token tok;
  tok.line = line_;
  tok.column = column_;
  const std::size_t start = pos_;
  const char c = text_[pos_];
  auto peek_char = [&](std::size_t off) { return pos_ + off < text_.size() ? text_[pos_ + off] : '\0'; };
  auto take = [&](Tok kind, std::size_t len) {
    tok.kind = kind;
    tok.text = std::string(text_.substr(pos_, len));
    pos_ += len;
    column_ += len;
    return tok;
  };

  if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      ++pos_;
    }
    tok.text = std::string(text_.substr(start, pos_ - start));
    column_ += pos_ - start;
    tok.kind = (std::isupper(static_cast<unsigned char>(c)) || c == '_') ? Tok::UpperIdent : Tok::LowerIdent;
    return tok;
  }
  if (std::isdigit(static_cast<unsigned char>(c)) ||
      (c == '-' && std::isdigit(static_cast<unsigned char>(peek_char(1))))) {
    ++pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    tok.text = std::string(text_.substr(start, pos_ - start));
    column_ += pos_ - start;
    try {
      tok.integer = std::stoll(tok.text);
    } catch (const std::out_of_range&) {
      throw ParseError("integer out of range: " + tok.text, tok.line, tok.column);
    }
    tok.kind = Tok::Integer;
    return tok;
  }
  switch (c) {
    case '(': return take(Tok::LParen, 1);
    case ')': return take(Tok::RParen, 1);
    case '[': return peek_char(1) == ']' ? take(Tok::Box, 2) : take(Tok::LBracket, 1);
    case ']': return take(Tok::RBracket, 1);
    case '@': return take(Tok::At, 1);
    case '#': return take(Tok::Hash, 1);
    case ',': return take(Tok::Comma, 1);
    case '.': return take(Tok::Dot, 1);
    case ':':
      if (peek_char(1) == '-') return take(Tok::If, 2);
      break;
    case '<':
      if (peek_char(1) == '>') return take(Tok::Diamond, 2);
      if (peek_char(1) == '=') return take(Tok::LessEqual, 2);
      return take(Tok::Less, 1);
    case '>':
      if (peek_char(1) == '=') return take(Tok::GreaterEqual, 2);
      return take(Tok::Greater, 1);
    case '=': return take(Tok::Equal, 1);
    case '!':
      if (peek_char(1) == '=') return take(Tok::NotEqual, 2);
      break;
    default: break;
  }
  fail(std::string("unexpected character '") + c + "'");
}

}  // namespace lars::detail
