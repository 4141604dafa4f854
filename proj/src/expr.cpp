#include "relhoare/expr.hpp"

#include <cctype>

#include "relhoare/error.hpp"

namespace relhoare::expr {

namespace {

using machine::Label;

[[noreturn]] void syntax(int line, const std::string& msg) { throw Error(ErrorCode::syntax_error, msg, line); }

std::optional<Label> label_name(const std::string& s) {
  if (s == "pc") return Label::pc();
  if (s == "flag_n") return Label::flag_n();
  if (s == "flag_z") return Label::flag_z();
  if (s.size() >= 2 && s[0] == 'x') {
    auto l = machine::parse_label(s);
    if (l && l->kind == Label::Kind::reg) return l;
  }
  return std::nullopt;
}

const std::set<std::string>& builtins() {
  static const std::set<std::string> b = {"min",     "max",        "prefixlen", "suffixlen", "memeq",
                                          "bytes",   "terminated", "aligned",   "reg"};
  return b;
}

struct Parser {
  const std::string& src;
  int line;
  std::size_t pos = 0;

  void skip() {
    while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) ++pos;
  }
  bool eat(const std::string& tok) {
    skip();
    if (src.compare(pos, tok.size(), tok) != 0) return false;
    // keep "<" from swallowing "<=" and identifiers from matching prefixes
    if (std::isalpha(static_cast<unsigned char>(tok[0])) && pos + tok.size() < src.size() &&
        (std::isalnum(static_cast<unsigned char>(src[pos + tok.size()])) || src[pos + tok.size()] == '_'))
      return false;
    pos += tok.size();
    return true;
  }
  void expect(const std::string& tok) {
    if (!eat(tok)) syntax(line, "expected '" + tok + "' at column " + std::to_string(pos + 1) + " in '" + src + "'");
  }

  ExprPtr make(Node::Kind k, std::string text, std::vector<ExprPtr> args) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->text = std::move(text);
    n->args = std::move(args);
    n->line = line;
    return n;
  }

  ExprPtr binary_level(int level) {
    static const std::vector<std::vector<std::string>> ops = {
        {"||", "or"}, {"&&", "and"}, {"==", "!=", "<=", ">=", "=", "<", ">"}, {"+", "-"}, {"*", "/", "%"}};
    if (level == static_cast<int>(ops.size())) return unary();
    auto lhs = binary_level(level + 1);
    for (;;) {
      std::string hit;
      for (const auto& op : ops[level])
        if (eat(op)) {
          hit = op;
          break;
        }
      if (hit.empty()) return lhs;
      if (hit == "or") hit = "||";
      if (hit == "and") hit = "&&";
      if (hit == "=") hit = "==";
      auto rhs = binary_level(level + 1);
      lhs = make(Node::Kind::binary, hit, {lhs, rhs});
      // comparisons do not chain
      if (level == 2) return lhs;
    }
  }

  ExprPtr unary() {
    if (eat("!") || eat("not")) return make(Node::Kind::unary, "!", {unary()});
    if (eat("-")) return make(Node::Kind::unary, "-", {unary()});
    return primary();
  }

  std::string ident() {
    skip();
    const auto start = pos;
    while (pos < src.size() && (std::isalnum(static_cast<unsigned char>(src[pos])) || src[pos] == '_' ||
                                (src[pos] == '.' && pos > start)))
      ++pos;
    return src.substr(start, pos - start);
  }

  ExprPtr primary() {
    skip();
    if (pos >= src.size()) syntax(line, "unexpected end of expression in '" + src + "'");
    const char c = src[pos];
    if (eat("(")) {
      auto e = binary_level(0);
      expect(")");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      const auto start = pos;
      while (pos < src.size() && std::isalnum(static_cast<unsigned char>(src[pos]))) ++pos;
      const auto tok = src.substr(start, pos - start);
      std::size_t used = 0;
      u64 v = 0;
      try {
        v = std::stoull(tok, &used, 0);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size() || (tok.size() > 1 && tok[0] == '0' && tok[1] != 'x' && tok[1] != 'X'))
        syntax(line, "bad number '" + tok + "'");
      auto n = make(Node::Kind::number, tok, {});
      std::const_pointer_cast<Node>(n)->value = v;
      return n;
    }
    if (c == '@') {
      ++pos;
      const auto name = ident();
      if (name.empty()) syntax(line, "expected a label after '@'");
      return make(Node::Kind::symbol, name, {});
    }
    const auto name = ident();
    if (name.empty()) syntax(line, "unexpected '" + std::string(1, c) + "' in '" + src + "'");
    if (name == "true" || name == "false") {
      auto n = make(Node::Kind::number, name, {});
      std::const_pointer_cast<Node>(n)->value = name == "true";
      return n;
    }
    if (eat("(")) {
      std::vector<ExprPtr> args;
      if (!eat(")")) {
        do args.push_back(binary_level(0));
        while (eat(","));
        expect(")");
      }
      if (name == "mem1" || name == "mem4" || name == "mem8") {
        if (args.size() != 1) syntax(line, name + " takes one address");
        auto n = make(Node::Kind::mem, name, args);
        std::const_pointer_cast<Node>(n)->size = static_cast<unsigned>(name[3] - '0');
        return n;
      }
      if (name == "reg") {
        if (args.size() != 1 || args[0]->kind != Node::Kind::label || args[0]->label.kind != Label::Kind::reg)
          syntax(line, "reg() takes a register name");
        return args[0];
      }
      if (!builtins().count(name)) syntax(line, "unknown function '" + name + "'");
      return make(Node::Kind::call, name, args);
    }
    if (eat("[")) {
      auto idx = binary_level(0);
      expect("]");
      return make(Node::Kind::index, name, {idx});
    }
    if (auto l = label_name(name)) {
      auto n = make(Node::Kind::label, name, {});
      std::const_pointer_cast<Node>(n)->label = *l;
      return n;
    }
    if (name == "aligned" || name == "terminated") return make(Node::Kind::call, name, {});
    return make(Node::Kind::name, name, {});
  }
};

const machine::MachineState& need_state(const Env& env, const Node& e) {
  if (!env.state) syntax(e.line, "'" + to_string(e) + "' reads machine state where none is available");
  return *env.state;
}

u64 lookup(const Env& env, const std::string& name, int line) {
  if (env.lookup)
    if (auto v = env.lookup(name)) return *v;
  throw Error(ErrorCode::undeclared_param, "undeclared parameter '" + name + "'", line);
}

void arity(const Node& e, std::size_t n) {
  if (e.args.size() != n)
    syntax(e.line, e.text + " takes " + std::to_string(n) + " argument" + (n == 1 ? "" : "s"));
}

u64 call(const Node& e, const Env& env) {
  const auto& f = e.text;
  auto arg = [&](std::size_t i) { return eval(*e.args[i], env); };
  if (f == "min" || f == "max") {
    arity(e, 2);
    const auto a = arg(0), b = arg(1);
    return f == "min" ? std::min(a, b) : std::max(a, b);
  }
  if (f == "prefixlen" || f == "suffixlen" || f == "memeq") {
    arity(e, 3);
    const auto& s = need_state(env, e);
    const auto a = arg(0), b = arg(1), len = arg(2);
    u64 k = 0;
    if (f == "suffixlen") {
      while (k < len && s.read8(a + len - 1 - k) == s.read8(b + len - 1 - k)) ++k;
    } else {
      while (k < len && s.read8(a + k) == s.read8(b + k)) ++k;
    }
    return f == "memeq" ? k == len : k;
  }
  if (f == "bytes") {
    arity(e, 3);
    if (e.args[2]->kind != Node::Kind::name) syntax(e.line, "bytes() takes an array parameter third");
    const auto& s = need_state(env, e);
    const auto a = arg(0), len = arg(1);
    for (u64 i = 0; i < len; ++i)
      if (s.read8(a + i) != (lookup(env, e.args[2]->text + "[" + std::to_string(i) + "]", e.line) & 0xFF))
        return 0;
    return 1;
  }
  if (f == "terminated") {
    const auto& s = need_state(env, e);
    if (e.args.empty()) {
      if (!env.stopper) syntax(e.line, "terminated needs an address outside a program context");
      return machine::is_terminated_at(s, *env.stopper);
    }
    arity(e, 1);
    return machine::is_terminated_at(s, arg(0));
  }
  if (f == "aligned") {
    arity(e, 0);
    if (!env.aligned) syntax(e.line, "aligned is only meaningful with a program");
    return env.aligned(need_state(env, e));
  }
  syntax(e.line, "unknown function '" + f + "'");
}

}  // namespace

ExprPtr parse(const std::string& text, int line) {
  Parser p{text, line};
  auto e = p.binary_level(0);
  p.skip();
  if (p.pos != text.size()) syntax(line, "trailing '" + text.substr(p.pos) + "' in expression");
  return e;
}

std::string to_string(const Node& e) {
  switch (e.kind) {
    case Node::Kind::number:
    case Node::Kind::name:
    case Node::Kind::label: return e.text;
    case Node::Kind::symbol: return "@" + e.text;
    case Node::Kind::index: return e.text + "[" + to_string(*e.args[0]) + "]";
    case Node::Kind::mem: return e.text + "(" + to_string(*e.args[0]) + ")";
    case Node::Kind::call: {
      if (e.args.empty() && (e.text == "aligned" || e.text == "terminated")) return e.text;
      std::string out = e.text + "(";
      for (std::size_t i = 0; i < e.args.size(); ++i) out += (i ? ", " : "") + to_string(*e.args[i]);
      return out + ")";
    }
    case Node::Kind::unary: return e.text + to_string(*e.args[0]);
    case Node::Kind::binary:
      return "(" + to_string(*e.args[0]) + " " + e.text + " " + to_string(*e.args[1]) + ")";
  }
  return "?";
}

u64 eval(const Node& e, const Env& env) {
  switch (e.kind) {
    case Node::Kind::number: return e.value;
    case Node::Kind::name: return lookup(env, e.text, e.line);
    case Node::Kind::index: return lookup(env, e.text + "[" + std::to_string(eval(*e.args[0], env)) + "]", e.line);
    case Node::Kind::symbol: {
      if (env.symbol)
        if (auto v = env.symbol(e.text)) return *v;
      throw Error(ErrorCode::undefined_label, "unknown program label @" + e.text, e.line);
    }
    case Node::Kind::label: return need_state(env, e).get(e.label);
    case Node::Kind::mem: return need_state(env, e).read(eval(*e.args[0], env), e.size);
    case Node::Kind::call: return call(e, env);
    case Node::Kind::unary: {
      const auto v = eval(*e.args[0], env);
      return e.text == "!" ? v == 0 : u64{0} - v;
    }
    case Node::Kind::binary: {
      const auto& op = e.text;
      if (op == "&&") return eval(*e.args[0], env) && eval(*e.args[1], env);
      if (op == "||") return eval(*e.args[0], env) || eval(*e.args[1], env);
      const auto a = eval(*e.args[0], env), b = eval(*e.args[1], env);
      if (op == "+") return a + b;
      if (op == "-") return a - b;
      if (op == "*") return a * b;
      if (op == "/" || op == "%") {
        if (b == 0) throw Error(ErrorCode::syntax_error, "division by zero in " + to_string(e), e.line);
        return op == "/" ? a / b : a % b;
      }
      if (op == "==") return a == b;
      if (op == "!=") return a != b;
      if (op == "<") return a < b;
      if (op == "<=") return a <= b;
      if (op == ">") return a > b;
      if (op == ">=") return a >= b;
      break;
    }
  }
  syntax(e.line, "cannot evaluate " + to_string(e));
}

void collect(const Node& e, Reads& out) {
  switch (e.kind) {
    case Node::Kind::label: out.labels.insert(e.label); break;
    case Node::Kind::mem: out.memory = true; break;
    case Node::Kind::name:
    case Node::Kind::index: out.names.insert(e.text); break;
    case Node::Kind::call:
      if (e.text == "prefixlen" || e.text == "suffixlen" || e.text == "memeq" || e.text == "bytes" ||
          e.text == "aligned" || e.text == "terminated") {
        out.memory = true;
        if (e.text == "aligned" || e.text == "terminated") out.labels.insert(Label::pc());
      }
      if (e.text == "bytes" && e.args.size() == 3) {
        out.names.insert(e.args[2]->text);
        collect(*e.args[0], out);
        collect(*e.args[1], out);
        return;
      }
      break;
    default: break;
  }
  for (const auto& a : e.args) collect(*a, out);
}

Reads reads(const Node& e) {
  Reads r;
  collect(e, r);
  return r;
}

bool invariant_under(const Reads& r, const std::set<machine::Label>& changed) {
  for (const auto& l : changed) {
    if (r.labels.count(l)) return false;
    if (r.memory && l.kind == Label::Kind::mem) return false;
  }
  return true;
}

}  // namespace relhoare::expr
