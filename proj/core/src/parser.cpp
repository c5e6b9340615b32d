#include <set>

#include "parsers.hpp"

namespace mpst {
namespace detail {

namespace {

bool is_keyword(const std::string& id) {
  static const std::set<std::string> kw = {"rec", "end",  "if",  "then", "else",
                                           "new", "true", "false", "and", "bool"};
  return kw.count(id) != 0;
}

class ProcParser {
 public:
  ProcParser(Lexer& lx, std::set<std::string> bound) : lx_(lx), bound_(std::move(bound)) {}

  ProcessPtr parse_par() {
    ProcessPtr p = parse_seq();
    while (lx_.is_punct("|")) {
      lx_.next();
      p = Process::make_par(p, parse_seq());
    }
    return p;
  }

 private:
  ProcessPtr parse_seq() {
    const Token& t = lx_.peek();
    if (t.kind == Token::Kind::Int) {
      if (t.value == 0) {
        lx_.next();
        return Process::make_inact();
      }
      lx_.fail("unexpected integer");
    }
    if (lx_.is_punct("(")) {
      lx_.next();
      if (lx_.is_ident("new")) {
        lx_.next();
        std::string n = expect_plain_ident();
        lx_.expect_punct(")");
        return Process::make_hide(n, parse_seq());
      }
      ProcessPtr p = parse_par();
      lx_.expect_punct(")");
      return p;
    }
    if (lx_.is_ident("if")) {
      lx_.next();
      ExprPtr e = parse_expr();
      if (!lx_.is_ident("then")) lx_.fail("expected 'then'");
      lx_.next();
      ProcessPtr thenp = parse_seq();
      if (!lx_.is_ident("else")) lx_.fail("expected 'else'");
      lx_.next();
      ProcessPtr elsep = parse_seq();
      return Process::make_if(e, thenp, elsep);
    }
    if (lx_.is_ident("rec")) {
      lx_.next();
      std::string x = expect_plain_ident();
      lx_.expect_punct(".");
      bool fresh = bound_.insert("X:" + x).second;
      ProcessPtr body = parse_seq();
      if (fresh) bound_.erase("X:" + x);
      return Process::make_rec(x, body);
    }
    if (t.kind != Token::Kind::Ident || is_keyword(t.text)) lx_.fail("expected a process");
    std::string id = lx_.next().text;

    if (lx_.is_punct("~")) {  // request: u~[p](x). P
      lx_.next();
      lx_.expect_punct("[");
      Role p = expect_role();
      lx_.expect_punct("]");
      lx_.expect_punct("(");
      std::string x = expect_plain_ident();
      lx_.expect_punct(")");
      lx_.expect_punct(".");
      ProcessPtr body = with_binder(x, [&] { return parse_seq(); });
      return Process::make_request(bound_.count(id) != 0, id, p, x, body);
    }

    if (!lx_.is_punct("[")) {
      // bare identifier: a process variable
      return Process::make_proc_var(id);
    }
    lx_.next();
    Role first = expect_role();
    lx_.expect_punct("]");

    if (lx_.is_punct("[")) {  // endpoint channel s[p][q]op
      lx_.next();
      Role q = expect_role();
      lx_.expect_punct("]");
      return parse_comm(Channel::make_endpoint({id, first}), q);
    }
    if (lx_.is_punct("(")) {
      lx_.next();
      if (lx_.is_punct("+")) {  // tokenised '(+)' never splits; '(' '+' means a typo
        lx_.fail("unexpected '+'");
      }
      // accept: u[p](x). P
      std::string x = expect_plain_ident();
      lx_.expect_punct(")");
      lx_.expect_punct(".");
      ProcessPtr body = with_binder(x, [&] { return parse_seq(); });
      return Process::make_accept(bound_.count(id) != 0, id, first, x, body);
    }
    // variable channel x[q]op
    return parse_comm(Channel::make_var(id), first);
  }

  ProcessPtr parse_comm(Channel c, Role q) {
    if (lx_.is_punct("!")) {
      lx_.next();
      lx_.expect_punct("<");
      ExprPtr e = parse_expr();
      lx_.expect_punct(">");
      lx_.expect_punct(".");
      return Process::make_send(c, q, e, parse_seq());
    }
    if (lx_.is_punct("?")) {
      lx_.next();
      lx_.expect_punct("(");
      std::string x = expect_plain_ident();
      lx_.expect_punct(")");
      lx_.expect_punct(".");
      ProcessPtr body = with_binder(x, [&] { return parse_seq(); });
      return Process::make_recv(c, q, x, body);
    }
    if (lx_.is_punct("(+)")) {
      lx_.next();
      std::string l = expect_plain_ident();
      lx_.expect_punct(".");
      return Process::make_select(c, q, l, parse_seq());
    }
    if (lx_.is_punct("&")) {
      lx_.next();
      lx_.expect_punct("{");
      std::vector<BranchArm> arms;
      std::set<std::string> labels;
      while (true) {
        std::string l = expect_plain_ident();
        if (!labels.insert(l).second)
          lx_.fail("duplicate branch label '" + l + "'");
        lx_.expect_punct(":");
        arms.push_back({l, parse_seq()});
        if (lx_.is_punct(",")) {
          lx_.next();
          continue;
        }
        break;
      }
      lx_.expect_punct("}");
      if (arms.empty()) lx_.fail("empty branch");
      return Process::make_branch(c, q, std::move(arms));
    }
    lx_.fail("expected '!', '?', '(+)' or '&'");
  }

  ExprPtr parse_expr() {
    ExprPtr e = parse_eq();
    while (lx_.is_ident("and")) {
      lx_.next();
      e = Expr::make_and(e, parse_eq());
    }
    return e;
  }

  ExprPtr parse_eq() {
    ExprPtr e = parse_atom();
    if (lx_.is_punct("==")) {
      lx_.next();
      e = Expr::make_eq(e, parse_atom());
    }
    return e;
  }

  ExprPtr parse_atom() {
    if (lx_.is_ident("true")) {
      lx_.next();
      return Expr::make_bool(true);
    }
    if (lx_.is_ident("false")) {
      lx_.next();
      return Expr::make_bool(false);
    }
    if (lx_.is_punct("(")) {
      lx_.next();
      ExprPtr e = parse_expr();
      lx_.expect_punct(")");
      return e;
    }
    std::string id = expect_plain_ident();
    if (lx_.is_punct("[")) {
      lx_.next();
      Role p = expect_role();
      lx_.expect_punct("]");
      return Expr::make_endpoint({id, p});
    }
    if (bound_.count(id)) return Expr::make_var(id);
    return Expr::make_name(id);
  }

  template <typename F>
  ProcessPtr with_binder(const std::string& x, F f) {
    bool fresh = bound_.insert(x).second;
    ProcessPtr p = f();
    if (fresh) bound_.erase(x);
    return p;
  }

  std::string expect_plain_ident() {
    const Token& t = lx_.peek();
    if (t.kind != Token::Kind::Ident || is_keyword(t.text))
      lx_.fail("expected identifier");
    return lx_.next().text;
  }

  Role expect_role() {
    long v = lx_.expect_int();
    if (v < 1) lx_.fail("roles are positive integers");
    return static_cast<Role>(v);
  }

  Lexer& lx_;
  std::set<std::string> bound_;
};

class TypeParser {
 public:
  explicit TypeParser(Lexer& lx) : lx_(lx) {}

  GlobalTypePtr parse_global() {
    if (lx_.is_ident("end")) {
      lx_.next();
      return GlobalType::make_end();
    }
    if (lx_.is_ident("rec")) {
      lx_.next();
      std::string t = expect_plain_ident();
      lx_.expect_punct(".");
      return GlobalType::make_rec(t, parse_global());
    }
    if (lx_.peek().kind == Token::Kind::Int) {
      Role from = expect_role();
      lx_.expect_punct("->");
      Role to = expect_role();
      lx_.expect_punct(":");
      if (lx_.is_punct("<")) {
        lx_.next();
        Exchange u = parse_exchange();
        lx_.expect_punct(">");
        lx_.expect_punct(".");
        return GlobalType::make_msg(from, to, u, parse_global());
      }
      lx_.expect_punct("{");
      std::vector<std::pair<std::string, GlobalTypePtr>> arms;
      std::set<std::string> labels;
      while (true) {
        std::string l = expect_plain_ident();
        if (!labels.insert(l).second) lx_.fail("duplicate label '" + l + "'");
        lx_.expect_punct(":");
        arms.emplace_back(l, parse_global());
        if (lx_.is_punct(",")) {
          lx_.next();
          continue;
        }
        break;
      }
      lx_.expect_punct("}");
      return GlobalType::make_choice(from, to, std::move(arms));
    }
    if (lx_.peek().kind == Token::Kind::Ident && !is_keyword(lx_.peek().text)) {
      return GlobalType::make_var(lx_.next().text);
    }
    lx_.fail("expected a global type");
  }

  LocalTypePtr parse_local() {
    if (lx_.is_ident("end")) {
      lx_.next();
      return LocalType::make_end();
    }
    if (lx_.is_ident("rec")) {
      lx_.next();
      std::string t = expect_plain_ident();
      lx_.expect_punct(".");
      return LocalType::make_rec(t, parse_local());
    }
    if (lx_.peek().kind == Token::Kind::Int) {
      Role peer = expect_role();
      if (lx_.is_punct("!")) {
        lx_.next();
        lx_.expect_punct("<");
        Exchange u = parse_exchange();
        lx_.expect_punct(">");
        lx_.expect_punct(".");
        return LocalType::make_send(peer, u, parse_local());
      }
      if (lx_.is_punct("?")) {
        lx_.next();
        lx_.expect_punct("(");
        Exchange u = parse_exchange();
        lx_.expect_punct(")");
        lx_.expect_punct(".");
        return LocalType::make_recv(peer, u, parse_local());
      }
      bool select = false;
      if (lx_.is_punct("(+)")) {
        select = true;
        lx_.next();
      } else if (lx_.is_punct("&")) {
        lx_.next();
      } else {
        lx_.fail("expected '!', '?', '(+)' or '&'");
      }
      lx_.expect_punct("{");
      std::vector<std::pair<std::string, LocalTypePtr>> arms;
      std::set<std::string> labels;
      while (true) {
        std::string l = expect_plain_ident();
        if (!labels.insert(l).second) lx_.fail("duplicate label '" + l + "'");
        lx_.expect_punct(":");
        arms.emplace_back(l, parse_local());
        if (lx_.is_punct(",")) {
          lx_.next();
          continue;
        }
        break;
      }
      lx_.expect_punct("}");
      return select ? LocalType::make_select(peer, std::move(arms))
                    : LocalType::make_branch(peer, std::move(arms));
    }
    if (lx_.peek().kind == Token::Kind::Ident && !is_keyword(lx_.peek().text)) {
      return LocalType::make_var(lx_.next().text);
    }
    lx_.fail("expected a local type");
  }

  // U ::= bool | <G> | atom-name | T   (T recognised by a leading role/rec/end)
  Exchange parse_exchange() {
    if (lx_.is_ident("bool")) {
      lx_.next();
      return Exchange::make_sort(Sort::make_bool());
    }
    if (lx_.is_punct("<")) {
      lx_.next();
      GlobalTypePtr g = parse_global();
      lx_.expect_punct(">");
      return Exchange::make_sort(Sort::make_global(g));
    }
    if (lx_.peek().kind == Token::Kind::Int || lx_.is_ident("rec") || lx_.is_ident("end")) {
      return Exchange::make_local(parse_local());
    }
    std::string id = expect_plain_ident();
    return Exchange::make_sort(Sort::make_atom(id));
  }

 private:
  std::string expect_plain_ident() {
    const Token& t = lx_.peek();
    if (t.kind != Token::Kind::Ident || is_keyword(t.text))
      lx_.fail("expected identifier");
    return lx_.next().text;
  }

  Role expect_role() {
    long v = lx_.expect_int();
    if (v < 1) lx_.fail("roles are positive integers");
    return static_cast<Role>(v);
  }

  Lexer& lx_;
};

}  // namespace

ProcessPtr parse_process(Lexer& lx, std::set<std::string> bound_vars) {
  ProcParser p(lx, std::move(bound_vars));
  return p.parse_par();
}

GlobalTypePtr parse_global(Lexer& lx) { return TypeParser(lx).parse_global(); }

LocalTypePtr parse_local(Lexer& lx) { return TypeParser(lx).parse_local(); }

Exchange parse_exchange(Lexer& lx) { return TypeParser(lx).parse_exchange(); }

}  // namespace detail

ProcessPtr parse_process(const std::string& text) {
  detail::Lexer lx(text);
  ProcessPtr p = detail::parse_process(lx);
  if (!lx.at_end()) lx.fail("trailing input after process");
  return p;
}

GlobalTypePtr parse_global_type(const std::string& text) {
  detail::Lexer lx(text);
  GlobalTypePtr g = detail::parse_global(lx);
  if (!lx.at_end()) lx.fail("trailing input after type");
  return g;
}

LocalTypePtr parse_local_type(const std::string& text) {
  detail::Lexer lx(text);
  LocalTypePtr t = detail::parse_local(lx);
  if (!lx.at_end()) lx.fail("trailing input after type");
  return t;
}

}  // namespace mpst
