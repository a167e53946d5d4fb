#include <cctype>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <optional>

#include "ukc/diagnostics.hpp"
#include "ukc/ir/registry.hpp"
#include "ukc/ir/text.hpp"

namespace ukc::ir {

namespace {

class Parser {
 public:
  explicit Parser(const std::string& text) : s_(text) {}

  std::unique_ptr<Operation> parse_top() {
    auto module = make_module();
    Block& body = module->body();
    scopes_.emplace_back();
    skip_ws();
    while (!at_end()) {
      if (peek() == '#' || (peek() == '!' && looks_like_type_alias_def())) {
        parse_alias_def();
      } else {
        body.push_back(parse_op());
      }
      skip_ws();
    }
    scopes_.pop_back();
    auto ops = body.ops();
    if (ops.size() == 1 && ops[0]->is("builtin.module")) return ops[0]->detach();
    return module;
  }

 private:
  // ------------------------------------------------------------------ lexing

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, line_, col_); }

  bool at_end() const { return pos_ >= s_.size(); }
  char peek(size_t ahead = 0) const { return pos_ + ahead < s_.size() ? s_[pos_ + ahead] : '\0'; }

  void advance() {
    if (s_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_ws() {
    while (!at_end()) {
      char c = peek();
      if (c == '/' && peek(1) == '/') {
        while (!at_end() && peek() != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  bool try_consume(char c) {
    skip_ws();
    if (peek() == c) {
      advance();
      return true;
    }
    return false;
  }

  bool try_consume(const std::string& word) {
    skip_ws();
    if (s_.compare(pos_, word.size(), word) != 0) return false;
    char after = peek(word.size());
    if (std::isalnum(static_cast<unsigned char>(word.back())) &&
        (std::isalnum(static_cast<unsigned char>(after)) || after == '_'))
      return false;
    for (size_t i = 0; i < word.size(); ++i) advance();
    return true;
  }

  void expect(char c) {
    if (!try_consume(c)) fail(std::string("expected '") + c + "'" + found());
  }

  void expect(const std::string& w) {
    if (!try_consume(w)) fail("expected '" + w + "'" + found());
  }

  std::string found() const {
    if (at_end()) return " but reached end of input";
    return std::string(" but found '") + peek() + "'";
  }

  static bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '$' || c == '-';
  }

  std::string lex_ident() {
    skip_ws();
    if (!(std::isalpha(static_cast<unsigned char>(peek())) || peek() == '_')) fail("expected identifier" + found());
    std::string out;
    while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '.' ||
                         peek() == '$'))
      out += peek(), advance();
    return out;
  }

  std::string lex_suffix_name() {
    std::string out;
    while (!at_end() && ident_char(peek()) && peek() != '-') out += peek(), advance();
    if (out.empty()) fail("expected name" + found());
    return out;
  }

  std::string lex_string() {
    skip_ws();
    if (peek() != '"') fail("expected string" + found());
    advance();
    std::string out;
    while (true) {
      if (at_end()) fail("unterminated string");
      char c = peek();
      advance();
      if (c == '"') break;
      if (c == '\\') {
        if (at_end()) fail("unterminated string");
        char e = peek();
        advance();
        out += (e == 'n') ? '\n' : e;
      } else {
        out += c;
      }
    }
    return out;
  }

  int64_t lex_int() {
    skip_ws();
    bool neg = false;
    if (peek() == '-') {
      neg = true;
      advance();
    }
    if (!std::isdigit(static_cast<unsigned char>(peek()))) fail("expected integer" + found());
    int64_t v = 0;
    while (std::isdigit(static_cast<unsigned char>(peek()))) {
      v = v * 10 + (peek() - '0');
      advance();
    }
    return neg ? -v : v;
  }

  // --------------------------------------------------------------- aliases

  bool looks_like_type_alias_def() const {
    size_t p = pos_ + 1;
    while (p < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[p])) || s_[p] == '_')) ++p;
    while (p < s_.size() && (s_[p] == ' ' || s_[p] == '\t')) ++p;
    return p < s_.size() && s_[p] == '=';
  }

  void parse_alias_def() {
    skip_ws();
    char sigil = peek();
    advance();
    std::string name = lex_suffix_name();
    expect('=');
    if (sigil == '#') {
      attr_aliases_[name] = parse_attribute();
    } else {
      type_aliases_[name] = parse_type();
    }
  }

  // ------------------------------------------------------------------ types

  Type parse_type() {
    skip_ws();
    if (try_consume('!')) {
      std::string name = lex_suffix_name();
      if (name == "rv.reg" || name == "rv.freg") {
        std::string reg;
        if (try_consume('<')) {
          reg = lex_ident();
          expect('>');
        }
        return name == "rv.reg" ? Type::int_reg(reg) : Type::float_reg(reg);
      }
      auto dot = name.find('.');
      std::string kind = dot == std::string::npos ? "" : name.substr(dot + 1);
      if (kind == "readable" || kind == "writable") {
        expect('<');
        Type el = parse_type();
        expect('>');
        return kind == "readable" ? Type::readable(el) : Type::writable(el);
      }
      auto it = type_aliases_.find(name);
      if (it == type_aliases_.end()) fail("unknown type '!" + name + "'");
      return it->second;
    }
    if (try_consume("f64")) return Type::f64();
    if (try_consume("f32")) return Type::f32();
    if (try_consume("index")) return Type::index();
    if (try_consume("none")) return Type::none();
    if (try_consume("vector")) {
      expect('<');
      skip_ws();
      if (lex_int() != 2) fail("only vector<2xf32> is supported");
      expect('x');
      expect("f32");
      expect('>');
      return Type::f32x2();
    }
    if (try_consume("memref")) {
      expect('<');
      std::vector<int64_t> shape;
      skip_ws();
      while (std::isdigit(static_cast<unsigned char>(peek()))) {
        shape.push_back(lex_int());
        if (peek() != 'x') fail("expected 'x' in memref shape" + found());
        advance();
      }
      Type el = parse_type();
      expect('>');
      return Type::memref(el, shape);
    }
    fail("expected type" + found());
  }

  // ------------------------------------------------------------- attributes

  Attribute parse_number() {
    skip_ws();
    size_t start = pos_;
    int sl = line_, sc = col_;
    if (peek() == '-' || peek() == '+') advance();
    if (try_consume("inf")) return Attribute(s_[start] == '-' ? -std::numeric_limits<double>::infinity()
                                                              : std::numeric_limits<double>::infinity());
    bool is_float = false;
    while (!at_end()) {
      char c = peek();
      if (std::isdigit(static_cast<unsigned char>(c))) {
        advance();
      } else if (c == '.' || c == 'e' || c == 'E') {
        is_float = true;
        advance();
        if ((c == 'e' || c == 'E') && (peek() == '-' || peek() == '+')) advance();
      } else {
        break;
      }
    }
    std::string text = s_.substr(start, pos_ - start);
    if (text.empty() || text == "-" || text == "+") throw ParseError("expected number", sl, sc);
    if (is_float) {
      char* end = nullptr;
      double v = std::strtod(text.c_str(), &end);
      if (end != text.c_str() + text.size()) throw ParseError("malformed float '" + text + "'", sl, sc);
      return Attribute(v);
    }
    char* end = nullptr;
    long long v = std::strtoll(text.c_str(), &end, 10);
    if (end != text.c_str() + text.size()) throw ParseError("malformed integer '" + text + "'", sl, sc);
    return Attribute(static_cast<int64_t>(v));
  }

  Attribute parse_attribute() {
    skip_ws();
    char c = peek();
    if (c == '"') return Attribute(lex_string());
    if (c == '[') {
      advance();
      AttrArray arr;
      if (!try_consume(']')) {
        do {
          arr.push_back(parse_attribute());
        } while (try_consume(','));
        expect(']');
      }
      return Attribute(std::move(arr));
    }
    if (c == '{') return Attribute(parse_attr_dict());
    if (c == '#') {
      advance();
      std::string name = lex_suffix_name();
      skip_ws();
      if (peek() == '<' && name.find('.') != std::string::npos) {
        advance();
        OpaqueAttr o;
        o.name = name;
        if (!try_consume('>')) {
          do {
            std::string key = lex_ident();
            expect('=');
            o.params.emplace_back(key, parse_attribute());
          } while (try_consume(','));
          expect('>');
        }
        return Attribute(std::move(o));
      }
      auto it = attr_aliases_.find(name);
      if (it == attr_aliases_.end()) fail("unknown attribute alias '#" + name + "'");
      return it->second;
    }
    if (c == '-' || c == '+' || std::isdigit(static_cast<unsigned char>(c))) return parse_number();
    if (try_consume("true")) return Attribute(true);
    if (try_consume("false")) return Attribute(false);
    if (try_consume("unit")) return Attribute();
    if (try_consume("inf")) return Attribute(std::numeric_limits<double>::infinity());
    if (try_consume("nan")) return Attribute(std::numeric_limits<double>::quiet_NaN());
    if (try_consume("affine_map")) return Attribute(parse_affine_map_body());
    fail("expected attribute" + found());
  }

  AttrDict parse_attr_dict() {
    expect('{');
    AttrDict d;
    if (try_consume('}')) return d;
    do {
      skip_ws();
      int kl = line_, kc = col_;
      std::string key = peek() == '"' ? lex_string() : lex_ident();
      if (d.count(key)) throw ParseError("duplicate attribute key '" + key + "'", kl, kc);
      if (try_consume('='))
        d[key] = parse_attribute();
      else
        d[key] = Attribute();
    } while (try_consume(','));
    expect('}');
    return d;
  }

  // ------------------------------------------------------------ affine maps

  AffineMap parse_affine_map_body() {
    expect('<');
    expect('(');
    std::map<std::string, unsigned> dims;
    AffineMap m;
    if (!try_consume(')')) {
      do {
        std::string d = lex_ident();
        if (dims.count(d)) fail("duplicate dimension '" + d + "'");
        unsigned idx = static_cast<unsigned>(dims.size());
        dims[d] = idx;
      } while (try_consume(','));
      expect(')');
    }
    m.num_dims = static_cast<unsigned>(dims.size());
    expect("->");
    expect('(');
    if (!try_consume(')')) {
      do {
        m.results.push_back(parse_affine_sum(dims));
      } while (try_consume(','));
      expect(')');
    }
    expect('>');
    return m;
  }

  AffineExpr parse_affine_sum(const std::map<std::string, unsigned>& dims) {
    AffineExpr e = parse_affine_term(dims);
    while (true) {
      skip_ws();
      if (peek() == '+') {
        advance();
        e = e + parse_affine_term(dims);
      } else if (peek() == '-' && peek(1) != '>') {
        advance();
        e = e + parse_affine_term(dims) * AffineExpr::constant(-1);
      } else {
        return e;
      }
    }
  }

  AffineExpr parse_affine_term(const std::map<std::string, unsigned>& dims) {
    AffineExpr e = parse_affine_factor(dims);
    while (true) {
      if (try_consume('*'))
        e = e * parse_affine_factor(dims);
      else if (try_consume("floordiv"))
        e = AffineExpr::floordiv(e, parse_affine_factor(dims));
      else if (try_consume("mod"))
        e = AffineExpr::mod(e, parse_affine_factor(dims));
      else
        return e;
    }
  }

  AffineExpr parse_affine_factor(const std::map<std::string, unsigned>& dims) {
    skip_ws();
    if (try_consume('(')) {
      AffineExpr e = parse_affine_sum(dims);
      expect(')');
      return e;
    }
    if (peek() == '-') {
      advance();
      return parse_affine_factor(dims) * AffineExpr::constant(-1);
    }
    if (std::isdigit(static_cast<unsigned char>(peek()))) return AffineExpr::constant(lex_int());
    int l = line_, c = col_;
    std::string name = lex_ident();
    auto it = dims.find(name);
    if (it == dims.end()) throw ParseError("unknown dimension '" + name + "'", l, c);
    return AffineExpr::dim(it->second);
  }

  // ---------------------------------------------------------------- values

  std::string lex_value_name() {
    skip_ws();
    if (peek() != '%') fail("expected value" + found());
    advance();
    std::string out;
    while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '$' ||
                         peek() == '.'))
      out += peek(), advance();
    if (out.empty()) fail("expected value name");
    return out;
  }

  Value* lookup_value(const std::string& name, int l, int c) {
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
      auto f = it->find(name);
      if (f != it->end()) return f->second;
    }
    throw ParseError("use of undefined value '%" + name + "'", l, c);
  }

  void define_value(const std::string& name, Value* v, int l, int c) {
    if (scopes_.back().count(name)) throw ParseError("redefinition of value '%" + name + "'", l, c);
    scopes_.back()[name] = v;
  }

  // ------------------------------------------------------------ operations

  std::unique_ptr<Operation> parse_op() {
    skip_ws();
    std::vector<std::pair<std::string, std::pair<int, int>>> result_names;
    if (peek() == '%') {
      do {
        skip_ws();
        int l = line_, c = col_;
        result_names.push_back({lex_value_name(), {l, c}});
      } while (try_consume(','));
      expect('=');
    }
    skip_ws();
    int name_line = line_, name_col = col_;
    std::string name = peek() == '"' ? lex_string() : lex_ident();
    if (!registry().lookup(name)) {
      auto dot = name.find('.');
      std::string dialect = dot == std::string::npos ? name : name.substr(0, dot);
      if (!registry().knows_dialect(dialect))
        throw ParseError("unknown dialect '" + dialect + "' in operation '" + name + "'", name_line, name_col);
      throw ParseError("unknown operation '" + name + "'", name_line, name_col);
    }

    std::vector<Value*> operands;
    std::vector<std::pair<int, int>> operand_pos;
    skip_ws();
    bool parens = false;
    if (peek() == '(') {
      // '(' followed by '{' opens the region list of an operand-less op.
      size_t p = pos_ + 1;
      while (p < s_.size() && std::isspace(static_cast<unsigned char>(s_[p]))) ++p;
      parens = p < s_.size() && s_[p] != '{';
    }
    if (parens) {
      expect('(');
      if (!try_consume(')')) {
        do {
          skip_ws();
          int l = line_, c = col_;
          operands.push_back(lookup_value(lex_value_name(), l, c));
          operand_pos.push_back({l, c});
        } while (try_consume(','));
        expect(')');
      }
    } else if (peek() == '%' && line_ == name_line) {
      // Bare operand lists must start on the line of the op name.
      do {
        skip_ws();
        int l = line_, c = col_;
        operands.push_back(lookup_value(lex_value_name(), l, c));
        operand_pos.push_back({l, c});
      } while (try_consume(','));
    }

    AttrDict attrs;
    skip_ws();
    if (peek() == '{') attrs = parse_attr_dict();

    std::vector<Type> result_types;
    if (try_consume(':')) {
      skip_ws();
      int tl = line_, tc = col_;
      if (peek() == '(') {
        advance();
        std::vector<Type> first;
        if (!try_consume(')')) {
          do {
            first.push_back(parse_type());
          } while (try_consume(','));
          expect(')');
        }
        if (try_consume("->")) {
          // Full functional form: operand types are checked.
          if (first.size() != operands.size())
            throw ParseError("operand type count mismatch for '" + name + "'", tl, tc);
          for (size_t i = 0; i < first.size(); ++i)
            if (first[i] != operands[i]->type())
              throw ParseError("type mismatch: operand has type " + operands[i]->type().str() + ", expected " +
                                   first[i].str(),
                               operand_pos[i].first, operand_pos[i].second);
          skip_ws();
          if (peek() == '(') {
            advance();
            if (!try_consume(')')) {
              do {
                result_types.push_back(parse_type());
              } while (try_consume(','));
              expect(')');
            }
          } else {
            result_types.push_back(parse_type());
          }
        } else {
          result_types = first;
        }
      } else {
        do {
          result_types.push_back(parse_type());
          skip_ws();
        } while (result_names.size() > result_types.size() && try_consume(','));
      }
    }
    if (!result_names.empty() && result_types.size() != result_names.size())
      throw ParseError("operation '" + name + "' declares " + std::to_string(result_names.size()) +
                           " results but " + std::to_string(result_types.size()) + " result types",
                       name_line, name_col);

    auto op = Operation::create(name, operands, result_types, Operation::AttrMap(attrs.begin(), attrs.end()));

    skip_ws();
    if (peek() == '(') {
      advance();
      do {
        parse_region(*op->add_region());
      } while (try_consume(','));
      expect(')');
    }

    for (size_t i = 0; i < result_names.size(); ++i)
      define_value(result_names[i].first, op->result(static_cast<unsigned>(i)), result_names[i].second.first,
                   result_names[i].second.second);
    return op;
  }

  void parse_region(Region& region) {
    expect('{');
    scopes_.emplace_back();
    std::map<std::string, Block*> labels;
    skip_ws();
    bool first = true;
    while (!try_consume('}')) {
      if (at_end()) fail("unterminated region: expected '}'");
      Block* block = region.add_block();
      skip_ws();
      if (peek() == '^') {
        advance();
        int l = line_, c = col_;
        std::string label = lex_suffix_name();
        if (labels.count(label)) throw ParseError("duplicate block label '^" + label + "'", l, c);
        labels[label] = block;
        if (try_consume('(')) {
          if (!try_consume(')')) {
            do {
              skip_ws();
              int al = line_, ac = col_;
              std::string an = lex_value_name();
              expect(':');
              define_value(an, block->add_arg(parse_type()), al, ac);
            } while (try_consume(','));
            expect(')');
          }
        }
        expect(':');
      } else if (!first) {
        fail("expected block label");
      }
      first = false;
      skip_ws();
      while (!at_end() && peek() != '}' && peek() != '^') {
        block->push_back(parse_op());
        skip_ws();
      }
    }
    scopes_.pop_back();
  }

  const std::string& s_;
  size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
  std::map<std::string, Attribute> attr_aliases_;
  std::map<std::string, Type> type_aliases_;
  std::vector<std::map<std::string, Value*>> scopes_;
};

}  // namespace

std::unique_ptr<Operation> parse(const std::string& text) { return Parser(text).parse_top(); }

}  // namespace ukc::ir
