#include "affe/parser.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <map>
#include <optional>

namespace affe {

namespace {

enum class Tok {
  End, Ident, TickIdent, Int, String,
  LParen, RParen, LRegion, RRegion,
  Amp, AmpBang, AmpAmp, AmpAmpBang,
  Arrow, ArrowOpen, ArrowClose,  // ->  -{  }>
  Star, Comma, Semi, Colon, Leq, FatArrow, Eq, Dot,
  Question, Bang,
  KwFun, KwLet, KwIn, KwMatch, KwWith, KwType, KwVal, KwUnderscore,
  KwCreate, KwObserve, KwUpdate, KwDestroy,
};

struct Token {
  Tok t;
  std::string text;
  int64_t ival = 0;
  SourceLoc loc;
};

struct Lexer {
  const std::string& src;
  size_t pos = 0;
  int line = 1, col = 1;

  explicit Lexer(const std::string& s) : src(s) {}

  SourceLoc loc() const { return {line, col}; }

  void advance(size_t n = 1) {
    for (size_t i = 0; i < n && pos < src.size(); i++) {
      if (src[pos] == '\n') {
        line++;
        col = 1;
      } else {
        col++;
      }
      pos++;
    }
  }

  bool starts(const char* s) const {
    size_t n = strlen(s);
    return src.compare(pos, n, s) == 0;
  }

  void skip_ws() {
    while (pos < src.size()) {
      char c = src[pos];
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        advance();
      } else if (starts("(*")) {
        int depth = 0;
        SourceLoc start = loc();
        while (pos < src.size()) {
          if (starts("(*")) {
            depth++;
            advance(2);
          } else if (starts("*)")) {
            depth--;
            advance(2);
            if (depth == 0) break;
          } else {
            advance();
          }
        }
        if (depth != 0) throw ParseError("unterminated comment", start);
      } else {
        break;
      }
    }
  }

  Token next() {
    skip_ws();
    SourceLoc l = loc();
    if (pos >= src.size()) return {Tok::End, "", 0, l};
    char c = src[pos];
    if (starts("{|")) { advance(2); return {Tok::LRegion, "{|", 0, l}; }
    if (starts("|}")) { advance(2); return {Tok::RRegion, "|}", 0, l}; }
    if (starts("&&!")) { advance(3); return {Tok::AmpAmpBang, "&&!", 0, l}; }
    if (starts("&&")) { advance(2); return {Tok::AmpAmp, "&&", 0, l}; }
    if (starts("&!")) { advance(2); return {Tok::AmpBang, "&!", 0, l}; }
    if (c == '&') { advance(); return {Tok::Amp, "&", 0, l}; }
    if (starts("->")) { advance(2); return {Tok::Arrow, "->", 0, l}; }
    if (starts("-{")) { advance(2); return {Tok::ArrowOpen, "-{", 0, l}; }
    if (starts("}>")) { advance(2); return {Tok::ArrowClose, "}>", 0, l}; }
    if (starts("<=")) { advance(2); return {Tok::Leq, "<=", 0, l}; }
    if (starts("=>")) { advance(2); return {Tok::FatArrow, "=>", 0, l}; }
    switch (c) {
      case '(': advance(); return {Tok::LParen, "(", 0, l};
      case ')': advance(); return {Tok::RParen, ")", 0, l};
      case '*': advance(); return {Tok::Star, "*", 0, l};
      case ',': advance(); return {Tok::Comma, ",", 0, l};
      case ';': advance(); return {Tok::Semi, ";", 0, l};
      case ':': advance(); return {Tok::Colon, ":", 0, l};
      case '=': advance(); return {Tok::Eq, "=", 0, l};
      case '?': advance(); return {Tok::Question, "?", 0, l};
      case '!': advance(); return {Tok::Bang, "!", 0, l};
      default: break;
    }
    if (c == '\'') {
      size_t start = pos;
      advance();
      while (pos < src.size() && (std::isalnum(static_cast<unsigned char>(src[pos])) || src[pos] == '_'))
        advance();
      return {Tok::TickIdent, src.substr(start, pos - start), 0, l};
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t start = pos;
      while (pos < src.size() && std::isdigit(static_cast<unsigned char>(src[pos]))) advance();
      Token t{Tok::Int, src.substr(start, pos - start), 0, l};
      t.ival = std::stoll(t.text);
      return t;
    }
    if (c == '"') {
      advance();
      std::string out;
      while (pos < src.size() && src[pos] != '"') {
        if (src[pos] == '\\' && pos + 1 < src.size()) {
          advance();
          char e = src[pos];
          out += (e == 'n' ? '\n' : e == 't' ? '\t' : e);
          advance();
        } else {
          out += src[pos];
          advance();
        }
      }
      if (pos >= src.size()) throw ParseError("unterminated string literal", l);
      advance();
      return {Tok::String, out, 0, l};
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t start = pos;
      while (pos < src.size() &&
             (std::isalnum(static_cast<unsigned char>(src[pos])) || src[pos] == '_' ||
              src[pos] == '.'))
        advance();
      std::string word = src.substr(start, pos - start);
      if (word == "fun") return {Tok::KwFun, word, 0, l};
      if (word == "let") return {Tok::KwLet, word, 0, l};
      if (word == "in") return {Tok::KwIn, word, 0, l};
      if (word == "match") return {Tok::KwMatch, word, 0, l};
      if (word == "with") return {Tok::KwWith, word, 0, l};
      if (word == "type") return {Tok::KwType, word, 0, l};
      if (word == "val") return {Tok::KwVal, word, 0, l};
      if (word == "create") return {Tok::KwCreate, word, 0, l};
      if (word == "observe") return {Tok::KwObserve, word, 0, l};
      if (word == "update") return {Tok::KwUpdate, word, 0, l};
      if (word == "destroy") return {Tok::KwDestroy, word, 0, l};
      if (word == "_") return {Tok::KwUnderscore, word, 0, l};
      return {Tok::Ident, word, 0, l};
    }
    throw ParseError(std::string("unexpected character '") + c + "'", l);
  }
};

struct Parser {
  std::vector<Token> toks;
  size_t ix = 0;
  FreshSource* fresh = nullptr;
  int gensym = 0;

  // scheme-scoped variable names
  std::map<std::string, int> tvar_names;
  std::map<std::string, int> kvar_names;
  std::map<int, Kind> tvar_bounds;

  explicit Parser(const std::string& src) {
    Lexer lx(src);
    while (true) {
      Token t = lx.next();
      toks.push_back(t);
      if (t.t == Tok::End) break;
    }
  }

  const Token& peek(size_t k = 0) const {
    size_t i = ix + k;
    return i < toks.size() ? toks[i] : toks.back();
  }
  Token take() { return toks[std::min(ix++, toks.size() - 1)]; }
  bool at(Tok t) const { return peek().t == t; }
  bool eat(Tok t) {
    if (at(t)) {
      ix++;
      return true;
    }
    return false;
  }
  Token expect(Tok t, const char* what) {
    if (!at(t)) throw ParseError(std::string("expected ") + what, peek().loc);
    return take();
  }

  std::string fresh_wild() { return "_w" + std::to_string(gensym++); }

  // ---- kinds -------------------------------------------------------------

  std::optional<KConst> const_of_word(const std::string& w) {
    auto parse_level = [](const std::string& s) -> std::optional<Level> {
      if (s.empty()) return 0;
      if (s == "inf" || s == "oo") return kLevelInf;
      for (char c : s)
        if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
      unsigned long long v = std::stoull(s);
      if (v > kLevelMax) return std::nullopt;
      return static_cast<Level>(v);
    };
    std::string base = w;
    std::string suffix;
    if (auto us = w.find('_'); us != std::string::npos) {
      base = w.substr(0, us);
      suffix = w.substr(us + 1);
    }
    Quality q;
    if (base == "un") q = Quality::Un;
    else if (base == "aff") q = Quality::Aff;
    else if (base == "lin") q = Quality::Lin;
    else return std::nullopt;
    auto lev = parse_level(suffix);
    if (!lev) return std::nullopt;
    return KConst{q, *lev};
  }

  int kvar_of_name(const std::string& name) {
    auto it = kvar_names.find(name);
    if (it != kvar_names.end()) return it->second;
    int id = fresh->fresh_kvar();
    kvar_names[name] = id;
    return id;
  }

  int tvar_of_name(const std::string& name) {
    auto it = tvar_names.find(name);
    if (it != tvar_names.end()) return it->second;
    int id = fresh->fresh_tvar();
    tvar_names[name] = id;
    return id;
  }

  Kind parse_kind() {
    if (at(Tok::TickIdent)) return Kind::mk_var(kvar_of_name(take().text));
    if (at(Tok::Ident)) {
      Token t = take();
      auto c = const_of_word(t.text);
      if (!c) throw ParseError("unknown kind '" + t.text + "'", t.loc);
      return Kind::mk_const(*c);
    }
    throw ParseError("expected kind", peek().loc);
  }

  // ---- types -------------------------------------------------------------

  bool type_starts() const {
    switch (peek().t) {
      case Tok::TickIdent:
      case Tok::Ident:
      case Tok::LParen:
      case Tok::Amp:
      case Tok::AmpBang:
        return true;
      default:
        return false;
    }
  }

  TypePtr parse_type() {
    TypePtr dom = parse_type_op();
    if (eat(Tok::Arrow)) {
      return Type::mk_arrow(dom, Kind::mk_const(kBottom), parse_type());
    }
    if (eat(Tok::ArrowOpen)) {
      Kind k = parse_kind();
      expect(Tok::ArrowClose, "}>");
      return Type::mk_arrow(dom, k, parse_type());
    }
    return dom;
  }

  TypePtr parse_type_op() {
    TypePtr l = parse_type_prod();
    if (at(Tok::Question) || at(Tok::Bang)) {
      std::string con = take().text;
      TypePtr r = parse_type_op();
      return Type::mk_app(con, {l, r});
    }
    return l;
  }

  TypePtr parse_type_prod() {
    TypePtr l = parse_type_app();
    if (eat(Tok::Star)) return Type::mk_pair(l, parse_type_prod());
    return l;
  }

  TypePtr parse_type_app() {
    std::vector<TypePtr> heads;  // pending constructor arguments
    TypePtr t = parse_type_atom(&heads);
    while (at(Tok::Ident)) {
      Token con = take();
      if (!heads.empty()) {
        t = Type::mk_app(con.text, heads);
        heads.clear();
      } else {
        t = Type::mk_app(con.text, {t});
      }
    }
    if (!heads.empty())
      throw ParseError("tuple of types must be applied to a constructor", peek().loc);
    return t;
  }

  // `heads` receives multiple comma-separated types awaiting a constructor.
  TypePtr parse_type_atom(std::vector<TypePtr>* heads) {
    if (at(Tok::TickIdent)) return Type::mk_var(tvar_of_name(take().text));
    if (at(Tok::Ident)) {
      Token t = take();
      if (const_of_word(t.text))
        throw ParseError("kind constant used as a type", t.loc);
      return Type::mk_app(t.text, {});
    }
    if (at(Tok::Amp) || at(Tok::AmpBang)) {
      BorrowSpec sp = take().t == Tok::Amp ? BorrowSpec::Shared : BorrowSpec::Exclusive;
      return parse_borrow_body(sp);
    }
    if (eat(Tok::LParen)) {
      TypePtr first = parse_type();
      if (eat(Tok::Comma)) {
        std::vector<TypePtr> args{first};
        do {
          args.push_back(parse_type());
        } while (eat(Tok::Comma));
        expect(Tok::RParen, ")");
        *heads = std::move(args);
        return nullptr;  // resolved by parse_type_app
      }
      expect(Tok::RParen, ")");
      return first;
    }
    throw ParseError("expected type", peek().loc);
  }

  TypePtr parse_borrow_body(BorrowSpec sp) {
    Kind k = Kind::mk_var(fresh->fresh_kvar());
    TypePtr inner;
    if (eat(Tok::LParen)) {
      // either &(kind, type) or &(type)
      size_t save = ix;
      bool explicit_kind = false;
      if (at(Tok::TickIdent) || at(Tok::Ident)) {
        Token t0 = peek();
        bool kindish = t0.t == Tok::TickIdent || const_of_word(t0.text).has_value();
        if (kindish && peek(1).t == Tok::Comma) {
          k = parse_kind();
          expect(Tok::Comma, ",");
          explicit_kind = true;
        }
      }
      (void)save;
      (void)explicit_kind;
      inner = parse_type();
      expect(Tok::RParen, ")");
    } else if (at(Tok::TickIdent)) {
      inner = Type::mk_var(tvar_of_name(take().text));
    } else if (at(Tok::Ident)) {
      Token t = take();
      inner = Type::mk_app(t.text, {});
    } else {
      throw ParseError("expected borrowed type", peek().loc);
    }
    // postfix constructors bind tighter than the borrow
    while (at(Tok::Ident)) inner = Type::mk_app(take().text, {inner});
    return Type::mk_borrow(sp, k, inner);
  }

  // ---- schemes -----------------------------------------------------------

  TypeScheme parse_scheme_body() {
    Constraint ctr;
    size_t save = ix;
    auto t0 = tvar_names;
    auto k0 = kvar_names;
    auto b0 = tvar_bounds;
    bool have_prefix = false;
    try {
      // try: constraint groups then =>
      std::vector<std::pair<std::string, std::string>> pending;
      (void)pending;
      bool any = false;
      while (true) {
        if (eat(Tok::LParen)) {
          do {
            parse_constraint_atom(ctr);
          } while (eat(Tok::Comma));
          expect(Tok::RParen, ")");
        } else {
          parse_constraint_atom(ctr);
        }
        any = true;
        if (eat(Tok::Comma)) continue;
        break;
      }
      if (any && eat(Tok::FatArrow)) have_prefix = true;
    } catch (ParseError&) {
      have_prefix = false;
    }
    if (!have_prefix) {
      ix = save;
      tvar_names = t0;
      kvar_names = k0;
      tvar_bounds = b0;
      ctr = Constraint{};
    }
    TypePtr body = parse_type();
    // quantify everything mentioned
    TypeScheme s;
    s.ctr = ctr;
    s.body = body;
    for (auto& [name, id] : kvar_names) {
      (void)name;
      s.kvars.push_back(id);
    }
    for (auto& [name, id] : tvar_names) {
      (void)name;
      auto it = tvar_bounds.find(id);
      Kind bound;
      if (it != tvar_bounds.end()) {
        bound = it->second;
      } else {
        bound = Kind::mk_var(fresh->fresh_kvar());
        s.kvars.push_back(bound.var);
      }
      s.tvars.push_back({id, bound});
    }
    std::sort(s.kvars.begin(), s.kvars.end());
    std::sort(s.tvars.begin(), s.tvars.end(),
              [](auto& a, auto& b) { return a.first < b.first; });
    return s;
  }

  void parse_constraint_atom(Constraint& ctr) {
    // 'a : kind | kind <= kind
    if (at(Tok::TickIdent) && peek(1).t == Tok::Colon) {
      std::string name = take().text;
      take();  // ':'
      Kind k = parse_kind();
      tvar_bounds[tvar_of_name(name)] = k;
      return;
    }
    Kind l = parse_kind();
    expect(Tok::Leq, "<=");
    Kind r = parse_kind();
    ctr.add_kind(l, r);
  }

  // ---- declarations ------------------------------------------------------

  Declaration parse_type_decl() {
    expect(Tok::KwType, "type");
    tvar_names.clear();
    kvar_names.clear();
    tvar_bounds.clear();
    std::vector<Kind> params;
    if (at(Tok::TickIdent)) {
      int id = tvar_of_name(take().text);
      Kind k = Kind::mk_var(fresh->fresh_kvar());
      tvar_bounds[id] = k;
      params.push_back(k);
    } else if (eat(Tok::LParen)) {
      do {
        std::string name = expect(Tok::TickIdent, "type parameter").text;
        int id = tvar_of_name(name);
        Kind k;
        if (eat(Tok::Colon)) k = parse_kind();
        else k = Kind::mk_var(fresh->fresh_kvar());
        tvar_bounds[id] = k;
        params.push_back(k);
      } while (eat(Tok::Comma));
      expect(Tok::RParen, ")");
    }
    std::string name;
    if (at(Tok::Ident)) name = take().text;
    else if (at(Tok::Question) || at(Tok::Bang)) name = take().text;
    else throw ParseError("expected type constructor name", peek().loc);
    expect(Tok::Colon, ":");
    Kind result = parse_kind();
    Declaration d;
    d.kind = Declaration::Kind::TyCon;
    d.name = name;
    d.kscheme.args = params;
    d.kscheme.result = result;
    for (auto& [n, id] : kvar_names) {
      (void)n;
      d.kscheme.kvars.push_back(id);
    }
    for (auto& k : params)
      if (k.is_var() &&
          std::find(d.kscheme.kvars.begin(), d.kscheme.kvars.end(), k.var) ==
              d.kscheme.kvars.end())
        d.kscheme.kvars.push_back(k.var);
    if (result.is_var() &&
        std::find(d.kscheme.kvars.begin(), d.kscheme.kvars.end(), result.var) ==
            d.kscheme.kvars.end())
      d.kscheme.kvars.push_back(result.var);
    std::sort(d.kscheme.kvars.begin(), d.kscheme.kvars.end());
    return d;
  }

  Declaration parse_val_decl() {
    expect(Tok::KwVal, "val");
    std::string name;
    if (at(Tok::Ident)) name = take().text;
    else if (at(Tok::Question) || at(Tok::Bang)) name = take().text;
    else throw ParseError("expected value name", peek().loc);
    expect(Tok::Colon, ":");
    tvar_names.clear();
    kvar_names.clear();
    tvar_bounds.clear();
    Declaration d;
    d.kind = Declaration::Kind::Val;
    d.name = name;
    d.scheme = parse_scheme_body();
    return d;
  }

  // ---- expressions -------------------------------------------------------

  SExprPtr parse_expr() {
    SourceLoc l = peek().loc;
    if (at(Tok::KwFun)) {
      take();
      std::vector<std::string> params;
      while (at(Tok::Ident) || at(Tok::KwUnderscore) ||
             (at(Tok::LParen) && peek(1).t == Tok::RParen)) {
        if (eat(Tok::LParen)) {
          expect(Tok::RParen, ")");
          params.push_back(fresh_wild());
          continue;
        }
        Token t = take();
        params.push_back(t.t == Tok::KwUnderscore ? fresh_wild() : t.text);
      }
      if (params.empty()) throw ParseError("fun needs at least one parameter", peek().loc);
      expect(Tok::Arrow, "->");
      SExprPtr body = parse_expr();
      for (auto it = params.rbegin(); it != params.rend(); ++it)
        body = s_lam(*it, body, l);
      return body;
    }
    if (at(Tok::KwLet)) {
      take();
      return parse_let_tail(l);
    }
    if (at(Tok::KwMatch)) {
      take();
      SExprPtr scrut = parse_seq();
      expect(Tok::KwWith, "with");
      MatchSpec spec;
      if (eat(Tok::Amp)) spec = BorrowSpec::Shared;
      else if (eat(Tok::AmpBang)) spec = BorrowSpec::Exclusive;
      expect(Tok::LParen, "(");
      std::string x = parse_binder();
      expect(Tok::Comma, ",");
      std::string y = parse_binder();
      expect(Tok::RParen, ")");
      expect(Tok::Arrow, "->");
      SExprPtr body = parse_expr();
      return s_match(spec, x, y, scrut, body, l);
    }
    return parse_seq();
  }

  std::string parse_binder() {
    if (at(Tok::KwUnderscore)) {
      take();
      return fresh_wild();
    }
    return expect(Tok::Ident, "identifier").text;
  }

  SExprPtr parse_let_tail(SourceLoc l) {
    // after 'let': pattern '=' expr 'in' expr, with `let f x y = e` sugar
    bool paren = eat(Tok::LParen);
    std::string x = parse_binder();
    if (eat(Tok::Comma)) {
      std::string y = parse_binder();
      if (paren) expect(Tok::RParen, ")");
      expect(Tok::Eq, "=");
      SExprPtr scrut = parse_expr();
      expect(Tok::KwIn, "in");
      SExprPtr body = parse_expr();
      return s_match(std::nullopt, x, y, scrut, body, l);
    }
    if (paren) expect(Tok::RParen, ")");
    std::vector<std::string> params;
    while (at(Tok::Ident) || at(Tok::KwUnderscore) ||
           (at(Tok::LParen) && peek(1).t == Tok::RParen)) {
      if (eat(Tok::LParen)) {
        expect(Tok::RParen, ")");
        params.push_back(fresh_wild());
        continue;
      }
      Token t = take();
      params.push_back(t.t == Tok::KwUnderscore ? fresh_wild() : t.text);
    }
    expect(Tok::Eq, "=");
    SExprPtr rhs = parse_expr();
    for (auto it = params.rbegin(); it != params.rend(); ++it) rhs = s_lam(*it, rhs, l);
    expect(Tok::KwIn, "in");
    SExprPtr body = parse_expr();
    return s_let(x, rhs, body, l);
  }

  SExprPtr parse_seq() {
    SourceLoc l = peek().loc;
    SExprPtr e = parse_app();
    if (eat(Tok::Semi)) {
      SExprPtr rest = parse_expr();
      return s_let(fresh_wild(), e, rest, l);
    }
    return e;
  }

  bool atom_starts() const {
    switch (peek().t) {
      case Tok::Int:
      case Tok::String:
      case Tok::Ident:
      case Tok::LParen:
      case Tok::LRegion:
      case Tok::Amp:
      case Tok::AmpBang:
      case Tok::AmpAmp:
      case Tok::AmpAmpBang:
      case Tok::KwCreate:
      case Tok::KwObserve:
      case Tok::KwUpdate:
      case Tok::KwDestroy:
        return true;
      default:
        return false;
    }
  }

  SExprPtr parse_app() {
    SourceLoc l = peek().loc;
    SExprPtr e = parse_atom();
    while (atom_starts()) e = s_app(e, parse_atom(), l);
    return e;
  }

  SExprPtr parse_atom() {
    SourceLoc l = peek().loc;
    switch (peek().t) {
      case Tok::Int: {
        Token t = take();
        ConstVal c;
        c.tag = ConstVal::Tag::Int;
        c.int_val = t.ival;
        return s_const(c, l);
      }
      case Tok::String: {
        Token t = take();
        ConstVal c;
        c.tag = ConstVal::Tag::String;
        c.str_val = t.text;
        return s_const(c, l);
      }
      case Tok::Ident:
        return s_var(take().text, l);
      case Tok::Amp: {
        take();
        return s_borrow(BorrowSpec::Shared, expect(Tok::Ident, "identifier").text, l);
      }
      case Tok::AmpBang: {
        take();
        return s_borrow(BorrowSpec::Exclusive, expect(Tok::Ident, "identifier").text, l);
      }
      case Tok::AmpAmp: {
        take();
        return s_reborrow(BorrowSpec::Shared, expect(Tok::Ident, "identifier").text, l);
      }
      case Tok::AmpAmpBang: {
        take();
        return s_reborrow(BorrowSpec::Exclusive, expect(Tok::Ident, "identifier").text, l);
      }
      case Tok::KwCreate: take(); return s_prim(SurfaceExpr::Tag::Create, l);
      case Tok::KwObserve: take(); return s_prim(SurfaceExpr::Tag::Observe, l);
      case Tok::KwUpdate: take(); return s_prim(SurfaceExpr::Tag::Update, l);
      case Tok::KwDestroy: take(); return s_prim(SurfaceExpr::Tag::Destroy, l);
      case Tok::LRegion: {
        take();
        SExprPtr e = parse_expr();
        expect(Tok::RRegion, "|}");
        return s_region_marker(e, l);
      }
      case Tok::LParen: {
        take();
        if (eat(Tok::RParen)) {
          ConstVal c;
          c.tag = ConstVal::Tag::Unit;
          return s_const(c, l);
        }
        std::vector<SExprPtr> parts{parse_expr()};
        while (eat(Tok::Comma)) parts.push_back(parse_expr());
        expect(Tok::RParen, ")");
        SExprPtr e = parts.back();
        for (size_t i = parts.size() - 1; i-- > 0;) e = s_pair(parts[i], e, l);
        return e;
      }
      default:
        throw ParseError("expected expression", peek().loc);
    }
  }
};

// tuples right-nest: (a, b, c) = (a, (b, c))
SExprPtr right_nest_pairs(SExprPtr e);

}  // namespace

SExprPtr parse_expr(const std::string& source) {
  Parser p(source);
  FreshSource fs;
  p.fresh = &fs;
  SExprPtr e = p.parse_expr();
  if (!p.at(Tok::End)) throw ParseError("trailing input", p.peek().loc);
  return e;
}

TypeScheme parse_scheme(const std::string& source, FreshSource& fresh) {
  Parser p(source);
  p.fresh = &fresh;
  TypeScheme s = p.parse_scheme_body();
  if (!p.at(Tok::End)) throw ParseError("trailing input", p.peek().loc);
  return s;
}

std::vector<Declaration> parse_declarations(const std::string& source, FreshSource& fresh) {
  Parser p(source);
  p.fresh = &fresh;
  std::vector<Declaration> out;
  while (!p.at(Tok::End)) {
    if (p.at(Tok::KwType)) out.push_back(p.parse_type_decl());
    else if (p.at(Tok::KwVal)) out.push_back(p.parse_val_decl());
    else throw ParseError("expected declaration", p.peek().loc);
  }
  return out;
}

Program parse_program(const std::string& source, FreshSource& fresh) {
  Parser p(source);
  p.fresh = &fresh;
  Program prog;
  while (!p.at(Tok::End)) {
    if (p.at(Tok::KwType)) {
      prog.decls.push_back(p.parse_type_decl());
    } else if (p.at(Tok::KwVal)) {
      prog.decls.push_back(p.parse_val_decl());
    } else if (p.at(Tok::KwLet)) {
      SourceLoc l = p.peek().loc;
      p.take();
      bool paren = p.eat(Tok::LParen);
      std::string name = p.parse_binder();
      if (paren) {
        throw ParseError("top-level bindings must bind a single name", l);
      }
      std::vector<std::string> params;
      while (p.at(Tok::Ident) || p.at(Tok::KwUnderscore) || p.at(Tok::LParen)) {
        if (p.eat(Tok::LParen)) {
          p.expect(Tok::RParen, ")");
          params.push_back(p.fresh_wild());  // unit parameter sugar: let f () = ...
          continue;
        }
        Token t = p.take();
        params.push_back(t.t == Tok::KwUnderscore ? p.fresh_wild() : t.text);
      }
      p.expect(Tok::Eq, "=");
      SExprPtr rhs = p.parse_expr();
      for (auto it = params.rbegin(); it != params.rend(); ++it) rhs = s_lam(*it, rhs, l);
      prog.bindings.push_back({name, rhs, l});
    } else {
      throw ParseError("expected declaration or top-level let", p.peek().loc);
    }
  }
  return prog;
}

}  // namespace affe
