#pragma once

// STRIPS-with-typing PDDL subset: text parser and canonical emitter,
// deterministic translation of a skill library into a domain, ground-state
// semantics, plan validation, and breadth-first forward search.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "demoplan/core.hpp"
#include "demoplan/skill.hpp"

namespace demoplan::pddl {

class ParseError : public Error {
public:
    ParseError(int line, int col, const std::string& msg)
        : Error("parse error at " + std::to_string(line) + ":" + std::to_string(col) + ": " + msg),
          line(line),
          col(col) {}
    int line;
    int col;
};

class TranslationError : public Error {
public:
    explicit TranslationError(const std::string& msg) : Error("translation error: " + msg) {}
};

struct TypedVar {
    std::string name;  // variables carry a leading '?'
    std::string type;
    auto operator<=>(const TypedVar&) const = default;
};

struct Literal {
    std::string pred;
    std::vector<std::string> args;  // mix of variables and constants
    bool negated = false;
    auto operator<=>(const Literal&) const = default;

    bool has_variable() const {
        for (const auto& a : args)
            if (!a.empty() && a[0] == '?') return true;
        return false;
    }
};

struct GroundAtom {
    std::string pred;
    std::vector<std::string> args;
    auto operator<=>(const GroundAtom&) const = default;

    std::string str() const {
        std::string s = "(" + pred;
        for (const auto& a : args) s += " " + a;
        return s + ")";
    }
};

using WorldState = std::set<GroundAtom>;

struct PredicateDecl {
    std::string name;
    std::vector<TypedVar> params;
    auto operator<=>(const PredicateDecl&) const = default;
};

struct PddlAction {
    std::string name;
    std::vector<TypedVar> params;
    std::vector<Literal> precondition;  // conjunction; literals may be negated
    std::vector<Literal> add_effects;
    std::vector<Literal> del_effects;
    auto operator<=>(const PddlAction&) const = default;
};

struct PddlDomain {
    std::string name;
    std::vector<std::string> requirements;  // exactly {strips, typing}
    std::vector<std::string> types;
    std::vector<PredicateDecl> predicates;
    std::vector<PddlAction> actions;
    auto operator<=>(const PddlDomain&) const = default;

    const PddlAction* find_action(const std::string& n) const {
        for (const auto& a : actions)
            if (a.name == n) return &a;
        return nullptr;
    }
    const PredicateDecl* find_predicate(const std::string& n) const {
        for (const auto& p : predicates)
            if (p.name == n) return &p;
        return nullptr;
    }
};

struct PddlProblem {
    std::string name;
    std::string domain_name;
    std::vector<TypedVar> objects;  // constant name + type
    WorldState init;
    std::set<GroundAtom> goal;
};

// ---------------------------------------------------------------------------
// Tokenizer / s-expression reader

namespace detail {

struct Token {
    enum class Kind { LParen, RParen, Symbol, End };
    Kind kind;
    std::string text;
    int line = 1;
    int col = 1;
};

inline std::vector<Token> tokenize(const std::string& text) {
    std::vector<Token> out;
    int line = 1, col = 1;
    std::size_t i = 0;
    auto advance = [&](char c) {
        if (c == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    };
    while (i < text.size()) {
        const char c = text[i];
        if (c == ';') {  // comment to end of line
            while (i < text.size() && text[i] != '\n') advance(text[i++]);
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            advance(c);
            ++i;
            continue;
        }
        if (c == '(' || c == ')') {
            out.push_back({c == '(' ? Token::Kind::LParen : Token::Kind::RParen,
                           std::string(1, c), line, col});
            advance(c);
            ++i;
            continue;
        }
        const int sl = line, sc = col;
        std::string sym;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i])) &&
               text[i] != '(' && text[i] != ')' && text[i] != ';') {
            sym += static_cast<char>(std::tolower(static_cast<unsigned char>(text[i])));
            advance(text[i]);
            ++i;
        }
        out.push_back({Token::Kind::Symbol, sym, sl, sc});
    }
    out.push_back({Token::Kind::End, "", line, col});
    return out;
}

struct SExpr {
    bool is_atom = false;
    std::string atom;
    std::vector<SExpr> items;
    int line = 1;
    int col = 1;
};

inline SExpr read_sexpr(const std::vector<Token>& toks, std::size_t& pos) {
    const Token& t = toks[pos];
    if (t.kind == Token::Kind::Symbol) {
        ++pos;
        return SExpr{true, t.text, {}, t.line, t.col};
    }
    if (t.kind == Token::Kind::LParen) {
        SExpr e{false, "", {}, t.line, t.col};
        ++pos;
        while (toks[pos].kind != Token::Kind::RParen) {
            if (toks[pos].kind == Token::Kind::End)
                throw ParseError(toks[pos].line, toks[pos].col, "expected ')'");
            e.items.push_back(read_sexpr(toks, pos));
        }
        ++pos;  // consume ')'
        return e;
    }
    throw ParseError(t.line, t.col, "expected '(' or symbol, got '" + t.text + "'");
}

inline const SExpr& expect_list(const SExpr& e, const char* what) {
    if (e.is_atom) throw ParseError(e.line, e.col, std::string("expected list for ") + what);
    return e;
}

inline const std::string& expect_atom(const SExpr& e, const char* what) {
    if (!e.is_atom) throw ParseError(e.line, e.col, std::string("expected ") + what);
    return e.atom;
}

// Typed list: names optionally followed by `- type` groups.
inline std::vector<TypedVar> parse_typed_list(const SExpr& list, const char* what) {
    std::vector<TypedVar> out;
    std::vector<std::string> pending;
    for (std::size_t i = 0; i < list.items.size(); ++i) {
        const std::string& s = expect_atom(list.items[i], what);
        if (s == "-") {
            if (i + 1 >= list.items.size())
                throw ParseError(list.line, list.col, "expected type after '-'");
            const std::string& ty = expect_atom(list.items[i + 1], "type name");
            for (auto& n : pending) out.push_back({n, ty});
            pending.clear();
            ++i;
        } else {
            pending.push_back(s);
        }
    }
    for (auto& n : pending) out.push_back({n, "object"});  // untyped defaults
    return out;
}

inline Literal parse_literal(const SExpr& e) {
    const SExpr& l = expect_list(e, "literal");
    if (l.items.empty()) throw ParseError(l.line, l.col, "empty literal");
    if (expect_atom(l.items[0], "predicate name") == "not") {
        if (l.items.size() != 2)
            throw ParseError(l.line, l.col, "'not' takes exactly one literal");
        Literal inner = parse_literal(l.items[1]);
        if (inner.negated) throw ParseError(l.line, l.col, "nested 'not'");
        inner.negated = true;
        return inner;
    }
    Literal lit;
    lit.pred = l.items[0].atom;
    for (std::size_t i = 1; i < l.items.size(); ++i)
        lit.args.push_back(expect_atom(l.items[i], "literal argument"));
    return lit;
}

// A conjunction is either (and L*) or a bare literal.
inline std::vector<Literal> parse_conjunction(const SExpr& e) {
    const SExpr& l = expect_list(e, "condition");
    if (!l.items.empty() && l.items[0].is_atom && l.items[0].atom == "and") {
        std::vector<Literal> out;
        for (std::size_t i = 1; i < l.items.size(); ++i) out.push_back(parse_literal(l.items[i]));
        return out;
    }
    if (l.items.empty()) return {};  // ()
    return {parse_literal(e)};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Domain parsing

/// Parses a STRIPS+typing domain. Normalization: a precondition variable
/// that is not declared in :parameters is appended to the parameter list,
/// typed from the predicate declaration. Free variables in effects are
/// rejected.
inline PddlDomain parse_domain(const std::string& text) {
    auto toks = detail::tokenize(text);
    std::size_t pos = 0;
    const auto root = detail::read_sexpr(toks, pos);
    if (root.is_atom || root.items.size() < 2 || !root.items[0].is_atom ||
        root.items[0].atom != "define")
        throw ParseError(root.line, root.col, "expected (define (domain ...) ...)");
    const auto& head = detail::expect_list(root.items[1], "(domain NAME)");
    if (head.items.size() != 2 || detail::expect_atom(head.items[0], "'domain'") != "domain")
        throw ParseError(head.line, head.col, "expected (domain NAME)");

    PddlDomain d;
    d.name = detail::expect_atom(head.items[1], "domain name");

    for (std::size_t i = 2; i < root.items.size(); ++i) {
        const auto& sec = detail::expect_list(root.items[i], "domain section");
        if (sec.items.empty()) continue;
        const std::string& tag = detail::expect_atom(sec.items[0], "section tag");
        if (tag == ":requirements") {
            for (std::size_t k = 1; k < sec.items.size(); ++k) {
                std::string r = detail::expect_atom(sec.items[k], "requirement");
                if (r != ":strips" && r != ":typing")
                    throw ParseError(sec.items[k].line, sec.items[k].col,
                                     "unsupported requirement " + r);
                d.requirements.push_back(r.substr(1));
            }
        } else if (tag == ":types") {
            for (std::size_t k = 1; k < sec.items.size(); ++k) {
                const std::string& ty = detail::expect_atom(sec.items[k], "type name");
                if (ty == "-")
                    throw ParseError(sec.items[k].line, sec.items[k].col,
                                     "type hierarchies are not supported");
                d.types.push_back(ty);
            }
        } else if (tag == ":predicates") {
            for (std::size_t k = 1; k < sec.items.size(); ++k) {
                const auto& p = detail::expect_list(sec.items[k], "predicate");
                if (p.items.empty())
                    throw ParseError(p.line, p.col, "empty predicate declaration");
                PredicateDecl decl;
                decl.name = detail::expect_atom(p.items[0], "predicate name");
                detail::SExpr rest = p;
                rest.items.erase(rest.items.begin());
                decl.params = detail::parse_typed_list(rest, "predicate parameter");
                d.predicates.push_back(decl);
            }
        } else if (tag == ":action") {
            if (sec.items.size() < 2)
                throw ParseError(sec.line, sec.col, "action needs a name");
            PddlAction a;
            a.name = detail::expect_atom(sec.items[1], "action name");
            for (std::size_t k = 2; k + 1 < sec.items.size(); k += 2) {
                const std::string& key = detail::expect_atom(sec.items[k], "action keyword");
                const auto& val = sec.items[k + 1];
                if (key == ":parameters") {
                    a.params = detail::parse_typed_list(detail::expect_list(val, "parameters"),
                                                        "parameter");
                } else if (key == ":precondition") {
                    a.precondition = detail::parse_conjunction(val);
                } else if (key == ":effect") {
                    for (auto& lit : detail::parse_conjunction(val)) {
                        if (lit.negated) {
                            lit.negated = false;
                            a.del_effects.push_back(lit);
                        } else {
                            a.add_effects.push_back(lit);
                        }
                    }
                } else {
                    throw ParseError(sec.items[k].line, sec.items[k].col,
                                     "unknown action keyword " + key);
                }
            }
            d.actions.push_back(a);
        } else {
            throw ParseError(sec.line, sec.col, "unknown domain section " + tag);
        }
    }

    // Declaration checks + free-variable normalization.
    for (auto& a : d.actions) {
        auto declared = [&](const std::string& v) {
            for (const auto& p : a.params)
                if (p.name == v) return true;
            return false;
        };
        auto check_pred = [&](const Literal& lit, int line, int col) -> const PredicateDecl* {
            const auto* decl = d.find_predicate(lit.pred);
            if (!decl)
                throw ParseError(line, col,
                                 "undeclared predicate '" + lit.pred + "' in action " + a.name);
            if (decl->params.size() != lit.args.size())
                throw ParseError(line, col, "predicate '" + lit.pred + "' arity mismatch in " +
                                                a.name);
            return decl;
        };
        for (auto& lit : a.precondition) {
            const auto* decl = check_pred(lit, 1, 1);
            for (std::size_t ai = 0; ai < lit.args.size(); ++ai) {
                const auto& arg = lit.args[ai];
                if (!arg.empty() && arg[0] == '?' && !declared(arg))
                    a.params.push_back({arg, decl->params[ai].type});
            }
        }
        for (const auto* effs : {&a.add_effects, &a.del_effects}) {
            for (const auto& lit : *effs) {
                check_pred(lit, 1, 1);
                for (const auto& arg : lit.args)
                    if (!arg.empty() && arg[0] == '?' && !declared(arg))
                        throw ParseError(1, 1, "free variable " + arg + " in effect of " + a.name);
            }
        }
        for (const auto& add : a.add_effects)
            for (const auto& del : a.del_effects)
                if (add == del)
                    throw ParseError(1, 1, "literal " + add.pred +
                                               " both added and deleted in " + a.name);
    }
    return d;
}

inline PddlProblem parse_problem(const std::string& text) {
    auto toks = detail::tokenize(text);
    std::size_t pos = 0;
    const auto root = detail::read_sexpr(toks, pos);
    if (root.is_atom || root.items.size() < 2 || !root.items[0].is_atom ||
        root.items[0].atom != "define")
        throw ParseError(root.line, root.col, "expected (define (problem ...) ...)");
    const auto& head = detail::expect_list(root.items[1], "(problem NAME)");
    if (head.items.size() != 2 || detail::expect_atom(head.items[0], "'problem'") != "problem")
        throw ParseError(head.line, head.col, "expected (problem NAME)");

    PddlProblem p;
    p.name = detail::expect_atom(head.items[1], "problem name");
    for (std::size_t i = 2; i < root.items.size(); ++i) {
        const auto& sec = detail::expect_list(root.items[i], "problem section");
        if (sec.items.empty()) continue;
        const std::string& tag = detail::expect_atom(sec.items[0], "section tag");
        if (tag == ":domain") {
            p.domain_name = detail::expect_atom(sec.items.at(1), "domain name");
        } else if (tag == ":objects") {
            detail::SExpr rest = sec;
            rest.items.erase(rest.items.begin());
            p.objects = detail::parse_typed_list(rest, "object");
        } else if (tag == ":init") {
            for (std::size_t k = 1; k < sec.items.size(); ++k) {
                Literal lit = detail::parse_literal(sec.items[k]);
                if (lit.negated || lit.has_variable())
                    throw ParseError(sec.items[k].line, sec.items[k].col,
                                     "init atoms must be positive and ground");
                p.init.insert({lit.pred, lit.args});
            }
        } else if (tag == ":goal") {
            for (const auto& lit : detail::parse_conjunction(sec.items.at(1))) {
                if (lit.negated || lit.has_variable())
                    throw ParseError(sec.line, sec.col, "goal atoms must be positive and ground");
                p.goal.insert({lit.pred, lit.args});
            }
        } else {
            throw ParseError(sec.line, sec.col, "unknown problem section " + tag);
        }
    }
    return p;
}

// ---------------------------------------------------------------------------
// Canonical emission: 2-space indent, lowercase, parameters on one line.

namespace detail {

inline std::string typed_list_str(const std::vector<TypedVar>& vars) {
    std::string s;
    for (const auto& v : vars) {
        if (!s.empty()) s += " ";
        s += v.name + " - " + v.type;
    }
    return s;
}

inline std::string literal_str(const Literal& lit) {
    std::string inner = "(" + lit.pred;
    for (const auto& a : lit.args) inner += " " + a;
    inner += ")";
    return lit.negated ? "(not " + inner + ")" : inner;
}

inline std::string conjunction_str(const std::vector<Literal>& lits) {
    std::string s = "(and";
    for (const auto& l : lits) s += " " + literal_str(l);
    return s + ")";
}

}  // namespace detail

inline std::string emit(const PddlDomain& d) {
    std::ostringstream out;
    out << "(define (domain " << d.name << ")\n";
    out << "  (:requirements";
    for (const auto& r : d.requirements) out << " :" << r;
    out << ")\n";
    if (!d.types.empty()) {
        out << "  (:types";
        for (const auto& t : d.types) out << " " << t;
        out << ")\n";
    }
    out << "  (:predicates\n";
    for (const auto& p : d.predicates) {
        out << "    (" << p.name;
        if (!p.params.empty()) out << " " << detail::typed_list_str(p.params);
        out << ")\n";
    }
    out << "  )\n";
    for (const auto& a : d.actions) {
        out << "  (:action " << a.name << "\n";
        out << "    :parameters (" << detail::typed_list_str(a.params) << ")\n";
        out << "    :precondition " << detail::conjunction_str(a.precondition) << "\n";
        std::vector<Literal> eff = a.add_effects;
        for (Literal l : a.del_effects) {
            l.negated = true;
            eff.push_back(l);
        }
        out << "    :effect " << detail::conjunction_str(eff) << "\n";
        out << "  )\n";
    }
    out << ")\n";
    return out.str();
}

inline std::string emit(const PddlProblem& p) {
    std::ostringstream out;
    out << "(define (problem " << p.name << ")\n";
    out << "  (:domain " << p.domain_name << ")\n";
    out << "  (:objects\n";
    for (const auto& o : p.objects) out << "    " << o.name << " - " << o.type << "\n";
    out << "  )\n";
    out << "  (:init";
    for (const auto& a : p.init) out << " " << a.str();
    out << ")\n";
    out << "  (:goal (and";
    for (const auto& a : p.goal) out << " " << a.str();
    out << "))\n";
    out << ")\n";
    return out.str();
}

// ---------------------------------------------------------------------------
// STRIPS semantics

class PreconditionUnsatisfied : public Error {
public:
    PreconditionUnsatisfied(const std::string& action, std::vector<std::string> failing)
        : Error("precondition unsatisfied for " + action + ": " + join(failing)),
          failing_literals(std::move(failing)) {}
    std::vector<std::string> failing_literals;

private:
    static std::string join(const std::vector<std::string>& v) {
        std::string s;
        for (const auto& e : v) s += (s.empty() ? "" : ", ") + e;
        return s;
    }
};

using Bindings = std::map<std::string, std::string>;

namespace detail {

inline std::optional<GroundAtom> ground(const Literal& lit, const Bindings& b) {
    GroundAtom atom{lit.pred, {}};
    for (const auto& a : lit.args) {
        if (!a.empty() && a[0] == '?') {
            auto it = b.find(a);
            if (it == b.end()) return std::nullopt;
            atom.args.push_back(it->second);
        } else {
            atom.args.push_back(a);
        }
    }
    return atom;
}

/// Precondition literals whose grounding fails under partial bindings are
/// skipped: they cannot be evaluated and are treated as vacuous.
inline std::vector<std::string> unsatisfied_preconditions(const PddlAction& action,
                                                          const WorldState& state,
                                                          const Bindings& b) {
    std::vector<std::string> failing;
    for (const auto& lit : action.precondition) {
        auto atom = ground(lit, b);
        if (!atom) continue;
        const bool present = state.count(*atom) > 0;
        if (present == lit.negated) {
            std::string s = atom->str();
            if (lit.negated) s = "(not " + s + ")";
            failing.push_back(s);
        }
    }
    return failing;
}

inline WorldState apply_effects(const PddlAction& action, WorldState state, const Bindings& b) {
    for (const auto& lit : action.del_effects)
        if (auto atom = ground(lit, b)) state.erase(*atom);
    for (const auto& lit : action.add_effects)
        if (auto atom = ground(lit, b)) state.insert(*atom);
    return state;
}

}  // namespace detail

/// Applies one action under full bindings. The input state is unchanged;
/// the successor is returned by value.
inline WorldState apply_action(const WorldState& state, const PddlAction& action,
                               const Bindings& bindings) {
    for (const auto& p : action.params)
        if (!bindings.count(p.name))
            throw Error("apply_action: missing binding for " + p.name + " in " + action.name);
    auto failing = detail::unsatisfied_preconditions(action, state, bindings);
    if (!failing.empty()) throw PreconditionUnsatisfied(action.name, failing);
    return detail::apply_effects(action, state, bindings);
}

struct GroundAction {
    std::string action;
    std::vector<std::string> args;  // positional
    auto operator<=>(const GroundAction&) const = default;

    std::string str() const {
        std::string s = "(" + action;
        for (const auto& a : args) s += " " + a;
        return s + ")";
    }
};

struct ValidationReport {
    struct Step {
        bool ok = false;
        std::string detail;
    };
    std::vector<Step> steps;
    bool goal_satisfied = false;
    WorldState final_state;

    bool all_ok() const {
        for (const auto& s : steps)
            if (!s.ok) return false;
        return true;
    }
};

/// Pure plan validation. Arguments bind positionally; a step may bind a
/// prefix of the action's parameters (trailing parameters introduced by
/// precondition normalization stay unbound and their literals are skipped).
/// A failed step leaves the state unchanged and validation continues.
inline ValidationReport validate_plan(const PddlDomain& domain, const WorldState& init,
                                      const std::vector<GroundAction>& plan,
                                      const std::set<GroundAtom>& goal) {
    ValidationReport report;
    WorldState state = init;
    for (const auto& ga : plan) {
        ValidationReport::Step step;
        const PddlAction* action = domain.find_action(ga.action);
        if (!action) {
            step.detail = "unknown action " + ga.action;
            report.steps.push_back(step);
            continue;
        }
        if (ga.args.size() > action->params.size()) {
            step.detail = "too many arguments for " + ga.action;
            report.steps.push_back(step);
            continue;
        }
        Bindings b;
        for (std::size_t i = 0; i < ga.args.size(); ++i) b[action->params[i].name] = ga.args[i];
        auto failing = detail::unsatisfied_preconditions(*action, state, b);
        if (!failing.empty()) {
            step.detail = "unsatisfied: ";
            for (const auto& f : failing) step.detail += f + " ";
            report.steps.push_back(step);
            continue;
        }
        state = detail::apply_effects(*action, state, b);
        step.ok = true;
        report.steps.push_back(step);
    }
    report.goal_satisfied =
        std::all_of(goal.begin(), goal.end(), [&](const GroundAtom& g) { return state.count(g); });
    report.final_state = state;
    return report;
}

/// Breadth-first search over ground actions. Returns a shortest plan with
/// deterministic tie-breaking (domain action order, then lexicographic
/// bindings), or nullopt when no plan exists within max_depth.
inline std::optional<std::vector<GroundAction>> forward_search(const PddlDomain& domain,
                                                               const WorldState& init,
                                                               const std::set<GroundAtom>& goal,
                                                               const std::vector<TypedVar>& universe,
                                                               int max_depth = 12) {
    auto satisfied = [&](const WorldState& s) {
        return std::all_of(goal.begin(), goal.end(),
                           [&](const GroundAtom& g) { return s.count(g); });
    };
    if (satisfied(init)) return std::vector<GroundAction>{};

    // Pre-ground every action against the typed universe.
    struct Grounded {
        GroundAction ga;
        const PddlAction* action;
        Bindings bindings;
    };
    std::vector<Grounded> grounded;
    for (const auto& action : domain.actions) {
        std::vector<std::vector<std::string>> candidates(action.params.size());
        bool feasible = true;
        for (std::size_t i = 0; i < action.params.size(); ++i) {
            for (const auto& c : universe)
                if (c.type == action.params[i].type) candidates[i].push_back(c.name);
            std::sort(candidates[i].begin(), candidates[i].end());
            candidates[i].erase(std::unique(candidates[i].begin(), candidates[i].end()),
                                candidates[i].end());
            if (candidates[i].empty()) feasible = false;
        }
        if (!feasible) continue;
        std::vector<std::size_t> idx(action.params.size(), 0);
        while (true) {
            Grounded g;
            g.action = &action;
            g.ga.action = action.name;
            for (std::size_t i = 0; i < idx.size(); ++i) {
                g.ga.args.push_back(candidates[i][idx[i]]);
                g.bindings[action.params[i].name] = candidates[i][idx[i]];
            }
            grounded.push_back(std::move(g));
            // odometer increment
            std::size_t k = idx.size();
            while (k > 0) {
                --k;
                if (++idx[k] < candidates[k].size()) break;
                idx[k] = 0;
                if (k == 0) {
                    k = SIZE_MAX;
                    break;
                }
            }
            if (idx.empty() || k == SIZE_MAX) break;
        }
    }

    std::map<WorldState, std::pair<std::size_t, std::size_t>> parent;  // state -> (parent idx, action idx)
    std::vector<WorldState> order;
    order.push_back(init);
    parent[init] = {SIZE_MAX, SIZE_MAX};
    std::vector<int> depth_of{0};

    for (std::size_t head = 0; head < order.size(); ++head) {
        const WorldState cur = order[head];  // copy: order may reallocate below
        if (depth_of[head] >= max_depth) continue;
        for (std::size_t gi = 0; gi < grounded.size(); ++gi) {
            const auto& g = grounded[gi];
            if (!detail::unsatisfied_preconditions(*g.action, cur, g.bindings).empty()) continue;
            WorldState next = detail::apply_effects(*g.action, cur, g.bindings);
            if (parent.count(next)) continue;
            parent[next] = {head, gi};
            if (satisfied(next)) {
                std::vector<GroundAction> plan{g.ga};
                std::size_t at = head;
                while (parent[order[at]].first != SIZE_MAX) {
                    plan.push_back(grounded[parent[order[at]].second].ga);
                    at = parent[order[at]].first;
                }
                std::reverse(plan.begin(), plan.end());
                return plan;
            }
            order.push_back(std::move(next));
            depth_of.push_back(depth_of[head] + 1);
        }
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Skill library -> PDDL translation

namespace detail {

inline std::string past_participle(const std::string& action) {
    if (!action.empty() && action.back() == 'e') return action + "d";
    return action + "ed";
}

struct CondLits {
    std::vector<Literal> positive;
    std::vector<Literal> negative;
};

}  // namespace detail

/// Deterministic translation of a resolved (inheritance-flattened) skill
/// library. Gripper conditions map to `holding`/`hand_open`, pose
/// conditions to `at`, and resistance success conditions to an abstract
/// effect predicate named after the action (insert -> inserted). Releasing
/// only re-opens the hand: in the bimanual cable task the object stays
/// under grip control, so `holding` is never deleted by a release.
inline PddlDomain translate_library(const SkillLibrary& lib) {
    PddlDomain d;
    d.name = "robot_skills";
    d.requirements = {"strips", "typing"};
    d.types = {"pose", "direction", "object", "env_object"};
    d.predicates.push_back({"hand_open", {}});
    d.predicates.push_back({"holding", {{"?o", "object"}}});
    d.predicates.push_back({"at", {{"?p", "pose"}}});

    auto declare_effect_pred = [&](const std::string& name, bool with_env) {
        if (d.find_predicate(name)) return;
        PredicateDecl decl{name, {{"?o", "object"}}};
        if (with_env) decl.params.push_back({"?e", "env_object"});
        d.predicates.push_back(decl);
    };

    for (const Skill* skill : lib.all_skills()) {
        PddlAction a;
        a.name = skill->name;
        a.params.push_back({"?o", "object"});
        if (skill->params.count("direction")) a.params.push_back({"?d", "direction"});
        if (skill->env_slot) a.params.push_back({"?e", "env_object"});
        if (skill->params.count("pose")) a.params.push_back({"?p", "pose"});

        // C_p -> precondition
        auto map_pre = [&](const ConditionExpr& c, auto&& self) -> void {
            using K = ConditionExpr::Kind;
            switch (c.kind()) {
                case K::GripperHolding:
                    a.precondition.push_back({"holding", {"?o"}, false});
                    break;
                case K::PoseReached:
                    a.precondition.push_back({"at", {"?p"}, false});
                    break;
                case K::And:
                    for (const auto& ch : c.children()) self(ch, self);
                    break;
                case K::Not:
                    if (c.inner().kind() == K::GripperHolding) {
                        a.precondition.push_back({"hand_open", {}, false});
                    } else if (c.inner().kind() == K::PoseReached) {
                        a.precondition.push_back({"at", {"?p"}, true});
                    } else {
                        throw TranslationError("no symbolic mapping for negated condition in " +
                                               skill->name);
                    }
                    break;
                default:
                    throw TranslationError("resistance condition in precondition of " +
                                           skill->name + " has no symbolic mapping");
            }
        };
        map_pre(skill->pre, map_pre);

        // C_s -> effect
        auto map_eff = [&](const ConditionExpr& c, auto&& self) -> void {
            using K = ConditionExpr::Kind;
            switch (c.kind()) {
                case K::GripperHolding:
                    a.add_effects.push_back({"holding", {"?o"}, false});
                    a.del_effects.push_back({"hand_open", {}, false});
                    break;
                case K::Not:
                    if (c.inner().kind() == K::GripperHolding) {
                        a.add_effects.push_back({"hand_open", {}, false});
                    } else {
                        throw TranslationError("no symbolic mapping for negated effect in " +
                                               skill->name);
                    }
                    break;
                case K::PoseReached:
                    a.add_effects.push_back({"at", {"?p"}, false});
                    break;
                case K::And:
                    for (const auto& ch : c.children()) self(ch, self);
                    break;
                default: {  // resistance condition -> abstract effect predicate
                    const std::string pred = detail::past_participle(skill->action);
                    declare_effect_pred(pred, skill->env_slot.has_value());
                    Literal lit{pred, {"?o"}, false};
                    if (skill->env_slot) lit.args.push_back("?e");
                    a.add_effects.push_back(lit);
                    break;
                }
            }
        };
        map_eff(skill->success, map_eff);
        d.actions.push_back(std::move(a));
    }
    return d;
}

}  // namespace demoplan::pddl
