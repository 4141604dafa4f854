#include "relhoare/spec.hpp"

#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <regex>
#include <set>
#include <sstream>

namespace relhoare::spec {

namespace k = relhoare::kernel;
using machine::Label;

const char* to_string(Kind kind) {
  switch (kind) {
    case Kind::unary: return "unary";
    case Kind::unary_n: return "unary_n";
    case Kind::relational: return "relational";
    case Kind::ct_relational: return "ct_relational";
    case Kind::ct_unary: return "ct_unary";
    case Kind::equiv: return "equiv";
    case Kind::promote: return "promote";
  }
  return "?";
}

namespace {

[[noreturn]] void syntax(int line, const std::string& msg) { throw Error(ErrorCode::syntax_error, msg, line); }

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::vector<std::string> split_top(const std::string& s, int line) {
  std::vector<std::string> out;
  int depth = 0;
  std::string cur;
  for (char c : s) {
    if (c == '(' || c == '[') ++depth;
    if (c == ')' || c == ']') --depth;
    if (c == ',' && depth == 0) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (depth != 0) syntax(line, "unbalanced brackets in '" + s + "'");
  if (!trim(cur).empty() || !out.empty()) out.push_back(trim(cur));
  for (const auto& item : out)
    if (item.empty()) syntax(line, "empty item in list '" + s + "'");
  return out;
}

std::optional<std::pair<std::string, std::string>> key_value(const std::string& s) {
  const auto eq = s.find('=');
  if (eq == std::string::npos) return std::nullopt;
  return std::make_pair(trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
}

u64 number(const std::string& s, int line) {
  std::size_t used = 0;
  u64 v = 0;
  try {
    v = std::stoull(s, &used, 0);
  } catch (const std::exception&) {
    used = 0;
  }
  if (s.empty() || used != s.size()) syntax(line, "expected a number, got '" + s + "'");
  return v;
}

LabelItem label_item(const std::string& text, int line) {
  LabelItem item;
  item.line = line;
  if (text.rfind("mem[", 0) == 0) {
    const auto dots = text.find("..");
    if (dots == std::string::npos) {
      if (text.back() != ']') syntax(line, "expected mem[ADDR] or mem[LO .. HI), got '" + text + "'");
      item.lo = expr::parse(text.substr(4, text.size() - 5), line);
      item.hi = nullptr;
      return item;
    }
    if (text.back() != ')') syntax(line, "byte ranges are half-open: mem[LO .. HI)");
    item.lo = expr::parse(text.substr(4, dots - 4), line);
    item.hi = expr::parse(text.substr(dots + 2, text.size() - dots - 3), line);
    return item;
  }
  if (text == "flag_n") item.label = Label::flag_n();
  else if (text == "flag_z") item.label = Label::flag_z();
  else item.label = machine::parse_label(text);
  if (!item.label) syntax(line, "unknown label '" + text + "'");
  return item;
}

void label_list(LabelList& out, const std::string& text, int line) {
  out.declared = true;
  auto t = trim(text);
  if (t == "all") {
    out.all = true;
    return;
  }
  if (t.rfind("all except", 0) == 0) {
    out.all = true;
    t = trim(t.substr(10));
  }
  if (t.empty()) return;
  for (const auto& item : split_top(t, line)) out.items.push_back(label_item(item, line));
}

Kind kind_of(const std::string& s, int line) {
  for (Kind kind : {Kind::unary, Kind::unary_n, Kind::relational, Kind::ct_relational, Kind::ct_unary, Kind::equiv,
                    Kind::promote})
    if (s == to_string(kind)) return kind;
  syntax(line, "unknown kind '" + s + "'");
}

struct Names {
  std::set<std::string> scalars, arrays;
  std::map<std::string, bool> constant;

  bool declared(const std::string& n) const { return scalars.count(n) || arrays.count(n); }
};

Names names_of(const CheckSpec& s) {
  Names n;
  static const std::regex elem(R"((\w+)\[\d+\])");
  for (const auto& p : s.params) {
    std::smatch m;
    if (std::regex_match(p.name, m, elem))
      n.arrays.insert(m[1]);
    else
      n.scalars.insert(p.name);
    n.constant[p.name] = p.lo == p.hi;
  }
  return n;
}

enum class Use { pre, post, labels };

void check_names(const expr::ExprPtr& e, const Names& n, Use use) {
  if (!e) return;
  const auto r = expr::reads(*e);
  for (const auto& name : r.names) {
    if (!n.declared(name)) throw Error(ErrorCode::undeclared_param, "undeclared parameter '" + name + "'", e->line);
    if (use == Use::post)
      syntax(e->line, "postconditions and frames read only the final state, not parameter '" + name + "'");
    if (use == Use::labels && !(n.scalars.count(name) && n.constant.at(name)))
      syntax(e->line, "label ranges must be constant; parameter '" + name + "' takes several values");
  }
  if (use == Use::labels && (r.memory || !r.labels.empty())) syntax(e->line, "label ranges cannot read machine state");
}

void check_list(const LabelList& l, const Names& n) {
  for (const auto& item : l.items) {
    check_names(item.lo, n, Use::labels);
    check_names(item.hi, n, Use::labels);
  }
}

}  // namespace

CheckSpec parse_spec(const std::string& text, const std::string& dir) {
  CheckSpec s;
  s.source = text;
  s.dir = dir.empty() ? "." : dir;
  std::istringstream in(text);
  std::string raw, section;
  int line = 0;
  bool kind_seen = false;
  static const std::set<std::string> sections = {"program0", "program1", "params", "pre",     "post",
                                                 "pre1",     "post1",    "frame",  "frame1",  "steps",
                                                 "public",   "private",  "witness", "equiv_in", "equiv_out"};
  static const std::regex param_re(R"((\w+)(?:\[(\d+)\])?\s+in\s+(\S+)\s*\.\.\s*(\S+))");
  while (std::getline(in, raw)) {
    ++line;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw = raw.substr(0, hash);
    const auto t = trim(raw);
    if (t.empty()) continue;
    if (t.front() == '[' && t.back() == ']') {
      section = trim(t.substr(1, t.size() - 2));
      if (!sections.count(section)) throw Error(ErrorCode::unknown_section, "unknown section [" + section + "]", line);
      if (section == "program0" || section == "program1") {
        auto& p = s.programs[section.back() - '0'];
        p.emplace();
        p->line = line;
      }
      continue;
    }
    if (section.empty()) {
      auto kv = key_value(t);
      if (!kv || kv->first != "kind") syntax(line, "expected 'kind = ...' before the first section");
      s.kind = kind_of(kv->second, line);
      kind_seen = true;
      continue;
    }
    if (section == "program0" || section == "program1") {
      auto& p = *s.programs[section.back() - '0'];
      auto kv = key_value(t);
      if (!kv) syntax(line, "expected 'key = value'");
      if (kv->first == "file") p.file = kv->second;
      else if (kv->first == "base") p.base = number(kv->second, line);
      else if (kv->first == "entry") p.entry = expr::parse(kv->second, line);
      else if (kv->first == "exit") p.exit = expr::parse(kv->second, line);
      else syntax(line, "unknown program key '" + kv->first + "'");
    } else if (section == "params") {
      std::smatch m;
      if (!std::regex_match(t, m, param_re)) syntax(line, "expected 'name in lo..hi' or 'name[len] in lo..hi'");
      const u64 lo = number(m[3], line), hi = number(m[4], line);
      if (lo > hi) syntax(line, "empty domain " + std::string(m[3]) + ".." + std::string(m[4]));
      if (m[2].matched) {
        const auto len = number(m[2], line);
        for (u64 i = 0; i < len; ++i) s.params.push_back({std::string(m[1]) + "[" + std::to_string(i) + "]", lo, hi, line});
      } else {
        s.params.push_back({m[1], lo, hi, line});
      }
    } else if (section == "pre" || section == "post" || section == "pre1" || section == "post1") {
      Constraint c{expr::parse(t, line), t, line};
      if (section == "pre") s.pre.push_back(c);
      else if (section == "post") s.post.push_back(c);
      else if (section == "pre1") (s.pre1 ? *s.pre1 : s.pre1.emplace()).push_back(c);
      else (s.post1 ? *s.post1 : s.post1.emplace()).push_back(c);
    } else if (section == "frame" || section == "frame1") {
      auto kv = key_value(t);
      if (!kv || kv->first != "maychange") syntax(line, "expected 'maychange = label, ...'");
      label_list(section == "frame" ? s.frame : s.frame1, kv->second, line);
    } else if (section == "steps") {
      auto kv = key_value(t);
      if (!kv || (kv->first != "f0" && kv->first != "f1")) syntax(line, "expected 'f0 = auto | EXPR'");
      StepDecl d;
      d.line = line;
      d.text = kv->second;
      if (kv->second != "auto") d.e = expr::parse(kv->second, line);
      if (kv->first == "f0") s.f0 = d;
      else {
        s.f1 = d;
        s.f1_declared = true;
      }
    } else if (section == "public" || section == "private") {
      label_list(section == "public" ? s.pub : s.priv, t, line);
    } else if (section == "witness") {
      s.witness.emplace_back(line, raw);
    } else if (section == "equiv_in" || section == "equiv_out") {
      auto kv = key_value(t);
      if (!kv || kv->first != "keep") syntax(line, "expected 'keep = label, ... | all | all except ...'");
      label_list(section == "equiv_in" ? s.equiv_in : s.equiv_out, kv->second, line);
    }
  }
  if (!kind_seen) syntax(1, "missing 'kind = ...'");
  if (!s.f1_declared) s.f1 = s.f0;

  const bool two = s.kind == Kind::equiv || s.kind == Kind::relational;
  for (int i = 0; i < (two ? 2 : 1); ++i) {
    auto& p = s.programs[static_cast<std::size_t>(i)];
    if (!p) syntax(line, std::string("missing [program") + char('0' + i) + "]");
    if (p->file.empty()) syntax(p->line, "program needs 'file = ...'");
    if (p->base % 4) throw Error(ErrorCode::misaligned_base, "program base must be a multiple of 4", p->line);
    const auto path = (std::filesystem::path(s.dir) / p->file).string();
    try {
      p->program = masm::assemble_file(path);
    } catch (const Error& e) {
      throw Error(e.code(), p->file + ":" + std::to_string(e.line()) + ": " + e.what(), p->line);
    }
    if (p->program.byte_len() == 0) syntax(p->line, p->file + " is empty");
  }
  if ((s.kind == Kind::ct_unary) && s.witness.empty()) syntax(line, "ct_unary needs a [witness]");
  if (two && (!s.equiv_in.declared || !s.equiv_out.declared)) syntax(line, "equivalence checks need [equiv_in] and [equiv_out]");

  const auto names = names_of(s);
  for (const auto* list : {&s.pre, s.pre1 ? &*s.pre1 : nullptr})
    if (list)
      for (const auto& c : *list) check_names(c.e, names, Use::pre);
  for (const auto* list : {&s.post, s.post1 ? &*s.post1 : nullptr})
    if (list)
      for (const auto& c : *list) check_names(c.e, names, Use::post);
  check_names(s.f0.e, names, Use::pre);
  check_names(s.f1.e, names, Use::pre);
  for (const auto* l : {&s.frame, &s.frame1, &s.pub, &s.priv, &s.equiv_in, &s.equiv_out}) check_list(*l, names);
  if (!s.witness.empty()) ct::parse_template(s.witness);
  return s;
}

CheckSpec load_spec(const std::string& path) {
  const auto text = masm::read_text(path);
  return parse_spec(text, std::filesystem::path(path).parent_path().string());
}

std::size_t default_cap() {
  if (const char* env = std::getenv("RELHOARE_ENUM_CAP")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw Error(ErrorCode::syntax_error, std::string("RELHOARE_ENUM_CAP is not a number: ") + env);
    }
  }
  return std::size_t{1} << 16;
}

std::size_t enumeration_size(const CheckSpec& s) {
  std::size_t total = 1;
  for (const auto& p : s.params) {
    const u64 size = p.hi - p.lo + 1;
    if (size == 0 || total > std::numeric_limits<std::size_t>::max() / size) return std::numeric_limits<std::size_t>::max();
    total *= size;
  }
  return total;
}

namespace {

std::set<Label> labels_of(const LabelList& l, const Valuation& v) {
  expr::Env env;
  env.lookup = [&v](const std::string& n) -> std::optional<u64> {
    auto it = v.find(n);
    if (it == v.end()) return std::nullopt;
    return it->second;
  };
  std::set<Label> out;
  for (const auto& item : l.items) {
    if (item.label) {
      out.insert(*item.label);
      continue;
    }
    const auto lo = expr::eval(*item.lo, env);
    const auto hi = item.hi ? expr::eval(*item.hi, env) : lo + 1;
    if (hi < lo || hi - lo > (1u << 16)) syntax(item.line, "byte range is empty or too large");
    for (u64 a = lo; a < hi; ++a) out.insert(Label::mem(a));
  }
  return out;
}

std::vector<Valuation> valuations(const CheckSpec& s, std::size_t cap) {
  const auto size = enumeration_size(s);
  if (size > cap)
    throw Error(ErrorCode::domain_too_large, "parameter domains have " +
                                                 (size == std::numeric_limits<std::size_t>::max() ? std::string("too many")
                                                                                                    : std::to_string(size)) +
                                                 " combinations, over the cap of " + std::to_string(cap));
  std::vector<Valuation> out;
  Valuation cur;
  for (const auto& p : s.params) cur[p.name] = p.lo;
  out.push_back(cur);
  // odometer, last parameter fastest
  for (;;) {
    std::size_t i = s.params.size();
    while (i > 0) {
      const auto& p = s.params[i - 1];
      if (cur[p.name] < p.hi) {
        ++cur[p.name];
        break;
      }
      cur[p.name] = p.lo;
      --i;
    }
    if (i == 0) break;
    out.push_back(cur);
  }
  return out;
}

/// Top-level conjuncts.
void atoms(const expr::ExprPtr& e, std::vector<expr::ExprPtr>& out) {
  if (e->kind == expr::Node::Kind::binary && e->text == "&&") {
    atoms(e->args[0], out);
    atoms(e->args[1], out);
  } else {
    out.push_back(e);
  }
}

struct SideContext {
  const ProgramDecl* decl;
  u64 entry = 0, exit = 0;

  std::function<std::optional<u64>(const std::string&)> symbols() const {
    const auto* d = decl;
    return [d](const std::string& n) -> std::optional<u64> {
      auto it = d->program.symbols.find(n);
      if (it == d->program.symbols.end()) return std::nullopt;
      return d->base + it->second;
    };
  }

  expr::Env env(const St* s, const Valuation* v) const {
    expr::Env e;
    e.state = s;
    e.symbol = symbols();
    const auto* d = decl;
    const u64 at = entry;
    e.aligned = [d, at](const St& st) {
      if (st.pc != at) return false;
      for (std::size_t i = 0; i < d->program.bytes.size(); ++i)
        if (st.read8(d->base + i) != d->program.bytes[i]) return false;
      return true;
    };
    e.stopper = exit;
    if (v)
      e.lookup = [v](const std::string& n) -> std::optional<u64> {
        auto it = v->find(n);
        if (it == v->end()) return std::nullopt;
        return it->second;
      };
    return e;
  }
};

bool construct(const std::vector<Constraint>& pre, const SideContext& ctx, const Valuation& v, St& s) {
  for (const auto& c : pre) {
    std::vector<expr::ExprPtr> parts;
    atoms(c.e, parts);
    for (const auto& a : parts) {
      const auto env = ctx.env(&s, &v);
      using K = expr::Node::Kind;
      if (a->kind == K::binary && a->text == "==" && a->args[0]->kind == K::label) {
        s.set(a->args[0]->label, expr::eval(*a->args[1], env));
      } else if (a->kind == K::binary && a->text == "==" && a->args[0]->kind == K::mem) {
        const auto addr = expr::eval(*a->args[0]->args[0], env);
        s.write(addr, a->args[0]->size, expr::eval(*a->args[1], env));
      } else if (a->kind == K::call && a->text == "aligned") {
        s = masm::load_program(s, ctx.decl->program, ctx.decl->base);
        s.pc = ctx.entry;
      } else if (a->kind == K::call && a->text == "bytes" && a->args.size() == 3) {
        const auto addr = expr::eval(*a->args[0], env);
        const auto len = expr::eval(*a->args[1], env);
        for (u64 i = 0; i < len; ++i) {
          const auto key = a->args[2]->text + "[" + std::to_string(i) + "]";
          auto it = v.find(key);
          if (it == v.end())
            throw Error(ErrorCode::undeclared_param, "bytes() reads " + key + ", which is not declared", c.line);
          s.write8(addr + i, static_cast<std::uint8_t>(it->second));
        }
      }
    }
  }
  for (const auto& c : pre)
    if (!expr::eval(*c.e, ctx.env(&s, &v))) return false;
  return true;
}

k::Property<St> post_property(const std::vector<Constraint>& post, const SideContext& ctx) {
  std::string desc;
  for (const auto& c : post) desc += (desc.empty() ? "" : " & ") + c.text;
  if (desc.empty()) desc = "true";
  return {[post, ctx](const St& s) {
            const auto env = ctx.env(&s, nullptr);
            for (const auto& c : post)
              if (!expr::eval(*c.e, env)) return false;
            return true;
          },
          desc};
}

}  // namespace

Instance instantiate(const CheckSpec& s, std::size_t cap) {
  Instance out;
  out.kind = s.kind;
  const auto vals = valuations(s, cap);
  // label ranges may only use single-valued parameters
  Valuation none;
  for (const auto& p : s.params)
    if (p.lo == p.hi) none[p.name] = p.lo;
  const bool two = s.kind == Kind::equiv || s.kind == Kind::relational;
  for (int i = 0; i < (two ? 2 : 1); ++i) {
    const auto& decl = *s.programs[static_cast<std::size_t>(i)];
    Side side;
    side.program = decl.program;
    side.base = decl.base;
    side.id = {decl.file, decl.program.bytes, decl.base};
    SideContext ctx{&decl, decl.base, decl.base + decl.program.byte_len() - 4};
    if (decl.entry) ctx.entry = expr::eval(*decl.entry, ctx.env(nullptr, nullptr));
    if (decl.exit) ctx.exit = expr::eval(*decl.exit, ctx.env(nullptr, nullptr));
    side.entry = ctx.entry;
    side.exit = ctx.exit;

    const auto& pre = i == 1 && s.pre1 ? *s.pre1 : s.pre;
    for (const auto& v : vals) {
      St st;
      if (!construct(pre, ctx, v, st)) continue;
      if (k::contains(side.instances, st)) continue;
      side.instances.push_back(st);
      side.valuations.push_back(v);
    }
    std::string desc;
    for (const auto& c : pre) desc += (desc.empty() ? "" : " & ") + c.text;
    const auto shared = std::make_shared<const std::vector<St>>(side.instances);
    side.pre.instances = side.instances;
    side.pre.predicate = {[shared](const St& st) { return k::contains(*shared, st); },
                          (desc.empty() ? std::string("true") : desc) + " (enumerated)"};
    side.post = post_property(i == 1 && s.post1 ? *s.post1 : s.post, ctx);
    const auto& frame = i == 1 && s.frame1.declared ? s.frame1 : s.frame;
    side.frame_labels = labels_of(frame, none);
    side.frame = frame.declared ? machine::maychange(side.frame_labels) : k::any_change<St>("any");
    if (frame.all) side.frame = k::any_change<St>("any");

    const auto& step = i == 1 ? s.f1 : s.f0;
    if (step.e) {
      std::vector<std::pair<St, k::Steps>> table;
      for (std::size_t j = 0; j < side.instances.size(); ++j)
        table.emplace_back(side.instances[j],
                           expr::eval(*step.e, ctx.env(&side.instances[j], &side.valuations[j])));
      side.steps = k::StepFn<St>::table(std::move(table), step.text);
    }
    if (i == 0) out.symbols0 = ctx.symbols();
    out.sides.push_back(std::move(side));
  }

  out.partition.pub = labels_of(s.pub, none);
  out.partition.pub.insert(Label::pc());
  out.partition.pub.insert(Label::events());
  out.partition.priv = labels_of(s.priv, none);
  if (s.kind == Kind::ct_relational || s.kind == Kind::ct_unary) machine::validate(out.partition);
  if (!s.witness.empty()) out.witness = ct::parse_template(s.witness);

  auto rel = [&none](const LabelList& l) {
    if (!l.declared) return equiv::EquivRel::all();
    const auto ls = labels_of(l, none);
    return l.all ? equiv::EquivRel::all_except(ls) : equiv::EquivRel::keep(ls);
  };
  out.in = rel(s.equiv_in);
  out.out = rel(s.equiv_out);
  return out;
}

std::string state_script(const St& s, const masm::Program& p, u64 base) {
  std::ostringstream os;
  os << std::hex << "pc=0x" << s.pc << std::dec << " n=" << s.n << " z=" << s.z;
  for (unsigned i = 0; i < 16; ++i)
    if (s.regs[i]) os << " x" << i << "=" << s.regs[i];
  std::map<u64, std::uint8_t> image;
  for (std::size_t i = 0; i < p.bytes.size(); ++i) image[base + i] = p.bytes[i];
  auto note = [&](u64 a, unsigned v) { os << std::hex << " mem[0x" << a << "]=0x" << v << std::dec; };
  for (const auto& [a, v] : s.mem) {
    auto it = image.find(a);
    if (it == image.end() || it->second != v) note(a, v);
  }
  for (const auto& [a, v] : image)
    if (v != 0 && s.read8(a) == 0) note(a, 0);
  if (!s.events.empty()) os << " events=" << s.events.size();
  return os.str();
}

St parse_state_script(const std::string& text, const masm::Program& p, u64 base) {
  St s = masm::load_program(St{}, p, base);
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) syntax(0, "bad state assignment '" + tok + "'");
    const auto name = tok.substr(0, eq);
    const u64 v = number(tok.substr(eq + 1), 0);
    if (name == "events") syntax(0, "initial states with events cannot be replayed");
    auto l = name == "n" ? std::optional<Label>(Label::flag_n()) : machine::parse_label(name);
    if (!l) syntax(0, "unknown label '" + name + "'");
    if (l->kind == Label::Kind::mem) s.write8(l->index, static_cast<std::uint8_t>(v));
    else s.set(*l, v);
  }
  return s;
}

int exit_code(k::Outcome o) {
  switch (o) {
    case k::Outcome::proven: return 0;
    case k::Outcome::refuted: return 1;
    case k::Outcome::unknown: return 2;
  }
  return 2;
}

}  // namespace relhoare::spec
