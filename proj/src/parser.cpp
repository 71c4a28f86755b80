#include "aggjoin/parser.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "aggjoin/error.hpp"

namespace aggjoin {

namespace {

enum class TokKind { Ident, Number, String, Symbol, End };

struct Token {
    TokKind kind;
    std::string text;   // idents upper-cased copy kept separately
    std::string upper;  // for keyword matching
    size_t pos;
    bool is_float = false;
};

std::vector<Token> tokenize(const std::string& text) {
    std::vector<Token> tokens;
    size_t i = 0;
    auto fail = [&](const std::string& msg, size_t at) {
        raise(ErrorKind::Parse, msg + " at position " + std::to_string(at));
    };
    while (i < text.size()) {
        char c = text[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        size_t start = i;
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            while (i < text.size() &&
                   (std::isalnum(static_cast<unsigned char>(text[i])) || text[i] == '_')) {
                ++i;
            }
            std::string word = text.substr(start, i - start);
            std::string upper = word;
            std::transform(upper.begin(), upper.end(), upper.begin(),
                           [](unsigned char ch) { return std::toupper(ch); });
            tokens.push_back({TokKind::Ident, word, upper, start});
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            bool is_float = false;
            while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
            if (i < text.size() && text[i] == '.') {
                is_float = true;
                ++i;
                while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
            }
            if (i < text.size() && (text[i] == 'e' || text[i] == 'E')) {
                is_float = true;
                ++i;
                if (i < text.size() && (text[i] == '+' || text[i] == '-')) ++i;
                while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
            }
            Token t{TokKind::Number, text.substr(start, i - start), "", start};
            t.is_float = is_float;
            tokens.push_back(t);
        } else if (c == '\'') {
            std::string body;
            ++i;
            while (true) {
                if (i >= text.size()) fail("unterminated string literal", start);
                if (text[i] == '\'') {
                    if (i + 1 < text.size() && text[i + 1] == '\'') {
                        body.push_back('\'');
                        i += 2;
                    } else {
                        ++i;
                        break;
                    }
                } else {
                    body.push_back(text[i++]);
                }
            }
            tokens.push_back({TokKind::String, body, "", start});
        } else if (c == '<' && i + 1 < text.size() && (text[i + 1] == '=' || text[i + 1] == '>')) {
            tokens.push_back({TokKind::Symbol, text.substr(i, 2), "", start});
            i += 2;
        } else if (c == '>' && i + 1 < text.size() && text[i + 1] == '=') {
            tokens.push_back({TokKind::Symbol, ">=", "", start});
            i += 2;
        } else if (c == '!' && i + 1 < text.size() && text[i + 1] == '=') {
            tokens.push_back({TokKind::Symbol, "!=", "", start});
            i += 2;
        } else if (std::string("(),.*+-/=<>;").find(c) != std::string::npos) {
            tokens.push_back({TokKind::Symbol, std::string(1, c), "", start});
            ++i;
        } else {
            fail(std::string("unexpected character '") + c + "'", start);
        }
    }
    tokens.push_back({TokKind::End, "", "", text.size()});
    return tokens;
}

class Parser {
public:
    Parser(const std::string& text, const Catalog& catalog)
        : catalog_(catalog), tokens_(tokenize(text)) {
        reject_subqueries();
    }

    Query parse() {
        expect_keyword("SELECT");
        size_t select_start = pos_;
        skip_until_top_level_keyword("FROM");
        size_t select_end = pos_;
        expect_keyword("FROM");
        parse_atom_list();

        // Clause boundaries known; now SELECT items can resolve.
        size_t after_from = pos_;
        pos_ = select_start;
        parse_select_list(select_end);
        pos_ = after_from;

        if (accept_keyword("WHERE")) parse_conjunction();
        if (accept_keyword("GROUP")) {
            expect_keyword("BY");
            parse_group_by();
        }
        accept_symbol(";");
        if (cur().kind != TokKind::End) {
            raise(ErrorKind::Parse, "trailing input at position " + std::to_string(cur().pos));
        }
        validate();
        return std::move(query_);
    }

private:
    const Catalog& catalog_;
    std::vector<Token> tokens_;
    size_t pos_ = 0;
    Query query_;
    std::vector<AttrRef> select_attrs_;

    const Token& cur() const { return tokens_[pos_]; }
    const Token& peek(size_t n = 1) const {
        return tokens_[std::min(pos_ + n, tokens_.size() - 1)];
    }

    void reject_subqueries() {
        for (size_t i = 0; i + 1 < tokens_.size(); ++i) {
            if (tokens_[i].kind == TokKind::Symbol && tokens_[i].text == "(" &&
                tokens_[i + 1].upper == "SELECT") {
                raise(ErrorKind::NotSupported, "subquery — decorrelate first");
            }
        }
        bool seen_select = false;
        for (const auto& t : tokens_) {
            if (t.upper == "SELECT") {
                if (seen_select) {
                    raise(ErrorKind::NotSupported, "subquery — decorrelate first");
                }
                seen_select = true;
            }
        }
    }

    [[noreturn]] void fail_here(const std::string& msg) {
        raise(ErrorKind::Parse, msg + " at position " + std::to_string(cur().pos));
    }

    bool accept_keyword(const std::string& kw) {
        if (cur().kind == TokKind::Ident && cur().upper == kw) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect_keyword(const std::string& kw) {
        if (!accept_keyword(kw)) fail_here("expected " + kw);
    }

    bool accept_symbol(const std::string& sym) {
        if (cur().kind == TokKind::Symbol && cur().text == sym) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect_symbol(const std::string& sym) {
        if (!accept_symbol(sym)) fail_here("expected '" + sym + "'");
    }

    void skip_until_top_level_keyword(const std::string& kw) {
        int depth = 0;
        while (cur().kind != TokKind::End) {
            if (cur().kind == TokKind::Symbol && cur().text == "(") ++depth;
            if (cur().kind == TokKind::Symbol && cur().text == ")") --depth;
            if (depth == 0 && cur().kind == TokKind::Ident && cur().upper == kw) return;
            ++pos_;
        }
        fail_here("expected " + kw + " clause");
    }

    static bool is_keyword(const Token& t) {
        static const char* kws[] = {"SELECT", "FROM", "WHERE", "GROUP", "BY",   "AND",
                                    "IN",     "AS",   "DISTINCT", "TRUE", "FALSE", "NULL"};
        for (const char* k : kws) {
            if (t.upper == k) return true;
        }
        return false;
    }

    void parse_atom_list() {
        while (true) {
            if (cur().kind != TokKind::Ident || is_keyword(cur())) fail_here("expected relation name");
            QueryAtom atom;
            atom.relation = cur().text;
            ++pos_;
            if (cur().kind == TokKind::Ident && !is_keyword(cur())) {
                atom.alias = cur().text;
                ++pos_;
            } else {
                atom.alias = atom.relation;
            }
            if (!catalog_.contains(atom.relation)) {
                raise(ErrorKind::Resolve, "unknown relation '" + atom.relation + "'");
            }
            for (const auto& existing : query_.atoms) {
                if (existing.alias == atom.alias) {
                    raise(ErrorKind::Resolve, "duplicate alias '" + atom.alias + "'");
                }
            }
            query_.atoms.push_back(std::move(atom));
            if (!accept_symbol(",")) break;
        }
    }

    AttrRef resolve_attr(const std::string& first, const std::string& second, size_t at) {
        AttrRef ref;
        if (!second.empty()) {
            for (size_t a = 0; a < query_.atoms.size(); ++a) {
                if (query_.atoms[a].alias == first) {
                    const Relation& rel = catalog_.get(query_.atoms[a].relation);
                    int col = rel.column_index(second);
                    if (col < 0) {
                        raise(ErrorKind::Resolve, "unresolved attribute '" + first + "." + second +
                                                      "' (no such column)");
                    }
                    ref.atom = static_cast<int>(a);
                    ref.column = col;
                    ref.text = first + "." + second;
                    return ref;
                }
            }
            raise(ErrorKind::Resolve, "unresolved attribute '" + first + "." + second +
                                          "' (no such alias)");
        }
        int found_atom = -1, found_col = -1;
        for (size_t a = 0; a < query_.atoms.size(); ++a) {
            const Relation& rel = catalog_.get(query_.atoms[a].relation);
            int col = rel.column_index(first);
            if (col >= 0) {
                if (found_atom >= 0) {
                    raise(ErrorKind::Resolve, "ambiguous attribute '" + first +
                                                  "' at position " + std::to_string(at) +
                                                  "; qualify with an alias");
                }
                found_atom = static_cast<int>(a);
                found_col = col;
            }
        }
        if (found_atom < 0) {
            raise(ErrorKind::Resolve, "unresolved attribute '" + first + "'");
        }
        ref.atom = found_atom;
        ref.column = found_col;
        ref.text = first;
        return ref;
    }

    AttrRef parse_attr_ref() {
        if (cur().kind != TokKind::Ident || is_keyword(cur())) fail_here("expected attribute");
        std::string first = cur().text;
        size_t at = cur().pos;
        ++pos_;
        std::string second;
        if (accept_symbol(".")) {
            if (cur().kind != TokKind::Ident) fail_here("expected attribute after '.'");
            second = cur().text;
            ++pos_;
        }
        return resolve_attr(first, second, at);
    }

    Value parse_literal() {
        if (cur().kind == TokKind::Number) {
            Value v;
            if (cur().is_float) {
                v = Value::from_float(std::stod(cur().text));
            } else {
                int64_t n = 0;
                std::from_chars(cur().text.data(), cur().text.data() + cur().text.size(), n);
                v = Value::from_int(n);
            }
            ++pos_;
            return v;
        }
        if (cur().kind == TokKind::String) {
            Value v = Value::from_text(cur().text);
            ++pos_;
            return v;
        }
        if (cur().upper == "TRUE" || cur().upper == "FALSE") {
            Value v = Value::from_bool(cur().upper == "TRUE");
            ++pos_;
            return v;
        }
        if (cur().upper == "NULL") {
            fail_here("NULL literals are not supported in predicates");
        }
        if (accept_symbol("-")) {
            Value v = parse_literal();
            if (v.tag() == Value::Tag::Int) return Value::from_int(-v.as_int());
            if (v.tag() == Value::Tag::Float) return Value::from_float(-v.as_float());
            fail_here("expected numeric literal after '-'");
        }
        fail_here("expected literal");
    }

    // --- scalar expressions (aggregate arguments) ---

    std::unique_ptr<ScalarExpr> parse_scalar() { return parse_additive(); }

    std::unique_ptr<ScalarExpr> parse_additive() {
        auto left = parse_multiplicative();
        while (true) {
            if (accept_symbol("+")) {
                left = ScalarExpr::make_binary(ScalarExpr::Kind::Add, std::move(left),
                                               parse_multiplicative());
            } else if (accept_symbol("-")) {
                left = ScalarExpr::make_binary(ScalarExpr::Kind::Sub, std::move(left),
                                               parse_multiplicative());
            } else {
                return left;
            }
        }
    }

    std::unique_ptr<ScalarExpr> parse_multiplicative() {
        auto left = parse_unary();
        while (true) {
            if (accept_symbol("*")) {
                left = ScalarExpr::make_binary(ScalarExpr::Kind::Mul, std::move(left),
                                               parse_unary());
            } else if (accept_symbol("/")) {
                left = ScalarExpr::make_binary(ScalarExpr::Kind::Div, std::move(left),
                                               parse_unary());
            } else {
                return left;
            }
        }
    }

    std::unique_ptr<ScalarExpr> parse_unary() {
        if (accept_symbol("-")) return ScalarExpr::make_neg(parse_unary());
        return parse_primary();
    }

    std::unique_ptr<ScalarExpr> parse_primary() {
        if (accept_symbol("(")) {
            auto e = parse_scalar();
            expect_symbol(")");
            return e;
        }
        if (cur().kind == TokKind::Number || cur().kind == TokKind::String ||
            cur().upper == "TRUE" || cur().upper == "FALSE" || cur().upper == "NULL") {
            return ScalarExpr::make_const(parse_literal());
        }
        return ScalarExpr::make_attr(parse_attr_ref());
    }

    // --- SELECT list ---

    static AggregateFunction aggregate_function_from_name(const std::string& upper) {
        if (upper == "COUNT") return AggregateFunction::Count;
        if (upper == "SUM") return AggregateFunction::Sum;
        if (upper == "AVG") return AggregateFunction::Avg;
        if (upper == "MIN") return AggregateFunction::Min;
        if (upper == "MAX") return AggregateFunction::Max;
        if (upper == "MEDIAN") return AggregateFunction::Median;
        if (upper == "PERCENTILE") return AggregateFunction::Percentile;
        if (upper == "VARIANCE" || upper == "VAR_POP") return AggregateFunction::Variance;
        if (upper == "STDDEV" || upper == "STDDEV_POP") return AggregateFunction::Stddev;
        if (upper == "CORR") return AggregateFunction::Corr;
        raise(ErrorKind::Parse, "unknown aggregate function '" + upper + "'");
    }

    static bool is_aggregate_name(const std::string& upper) {
        static const char* names[] = {"COUNT",  "SUM",    "AVG",        "MIN",
                                      "MAX",    "MEDIAN", "PERCENTILE", "VARIANCE",
                                      "VAR_POP", "STDDEV", "STDDEV_POP", "CORR"};
        for (const char* n : names) {
            if (upper == n) return true;
        }
        return false;
    }

    void parse_select_list(size_t end_pos) {
        while (pos_ < end_pos) {
            if (cur().kind == TokKind::Ident && is_aggregate_name(cur().upper) &&
                peek().kind == TokKind::Symbol && peek().text == "(") {
                parse_aggregate();
            } else {
                select_attrs_.push_back(parse_attr_ref());
            }
            if (pos_ < end_pos) {
                if (!accept_symbol(",")) fail_here("expected ',' in select list");
            }
        }
    }

    void parse_aggregate() {
        AggregateExpr agg;
        std::string name = cur().upper;
        agg.function = aggregate_function_from_name(name);
        ++pos_;
        expect_symbol("(");
        if (agg.function == AggregateFunction::Count && accept_symbol("*")) {
            agg.function = AggregateFunction::CountStar;
        } else if (agg.function == AggregateFunction::Count && accept_keyword("DISTINCT")) {
            agg.function = AggregateFunction::CountDistinct;
            agg.expr = parse_scalar();
        } else if (agg.function == AggregateFunction::Percentile) {
            if (cur().kind != TokKind::Number) fail_here("PERCENTILE expects a fraction first");
            agg.fraction = std::stod(cur().text);
            if (agg.fraction < 0.0 || agg.fraction > 1.0) {
                fail_here("PERCENTILE fraction must be in [0,1]");
            }
            ++pos_;
            expect_symbol(",");
            agg.expr = parse_scalar();
        } else if (agg.function == AggregateFunction::Corr) {
            agg.expr = parse_scalar();
            expect_symbol(",");
            agg.expr2 = parse_scalar();
        } else {
            agg.expr = parse_scalar();
        }
        expect_symbol(")");
        if (accept_keyword("AS")) {
            if (cur().kind != TokKind::Ident) fail_here("expected alias after AS");
            agg.alias = cur().text;
            ++pos_;
        }
        query_.aggregates.push_back(std::move(agg));
    }

    // --- WHERE ---

    void parse_conjunction() {
        while (true) {
            parse_condition();
            if (!accept_keyword("AND")) break;
        }
    }

    static CompareOp compare_op_from_symbol(const std::string& sym) {
        if (sym == "=") return CompareOp::Eq;
        if (sym == "!=" || sym == "<>") return CompareOp::Ne;
        if (sym == "<") return CompareOp::Lt;
        if (sym == "<=") return CompareOp::Le;
        if (sym == ">") return CompareOp::Gt;
        if (sym == ">=") return CompareOp::Ge;
        raise(ErrorKind::Internal, "bad comparison symbol");
    }

    static CompareOp flip(CompareOp op) {
        switch (op) {
            case CompareOp::Lt: return CompareOp::Gt;
            case CompareOp::Le: return CompareOp::Ge;
            case CompareOp::Gt: return CompareOp::Lt;
            case CompareOp::Ge: return CompareOp::Le;
            default: return op;
        }
    }

    void check_predicate_types(const AttrRef& attr, Value& constant) {
        AttributeType type =
            catalog_.get(query_.atoms[attr.atom].relation).schema()[attr.column].type;
        switch (constant.tag()) {
            case Value::Tag::Int:
                if (type == AttributeType::Float64) {
                    constant = Value::from_float(static_cast<double>(constant.as_int()));
                    return;
                }
                if (type == AttributeType::Int64) return;
                break;
            case Value::Tag::Float:
                if (type == AttributeType::Float64 || type == AttributeType::Int64) return;
                break;
            case Value::Tag::Text:
                if (type == AttributeType::Text) return;
                break;
            case Value::Tag::Bool:
                if (type == AttributeType::Bool) return;
                break;
            default:
                break;
        }
        raise(ErrorKind::Resolve, "predicate constant type does not match attribute '" +
                                      attr.text + "' (" + to_string(type) + ")");
    }

    bool next_is_attr_operand() const {
        return cur().kind == TokKind::Ident && !is_keyword(cur());
    }

    void parse_condition() {
        if (!next_is_attr_operand()) {
            // literal-first form: <lit> op <attr>
            Value lit = parse_literal();
            if (cur().kind != TokKind::Symbol) fail_here("expected comparison operator");
            CompareOp op = compare_op_from_symbol(cur().text);
            ++pos_;
            if (!next_is_attr_operand()) fail_here("constant-only conditions are not supported");
            AttrRef attr = parse_attr_ref();
            Predicate pred;
            pred.attr = attr;
            pred.op = flip(op);
            pred.constant = lit;
            check_predicate_types(pred.attr, pred.constant);
            query_.atoms[attr.atom].local_predicates.push_back(std::move(pred));
            return;
        }

        AttrRef left = parse_attr_ref();
        if (accept_keyword("IN")) {
            expect_symbol("(");
            Predicate pred;
            pred.attr = left;
            pred.is_in_list = true;
            while (true) {
                Value v = parse_literal();
                check_predicate_types(pred.attr, v);
                pred.in_list.push_back(v);
                if (!accept_symbol(",")) break;
            }
            expect_symbol(")");
            query_.atoms[left.atom].local_predicates.push_back(std::move(pred));
            return;
        }
        if (cur().kind != TokKind::Symbol || std::string("=<>!").find(cur().text[0]) == std::string::npos) {
            fail_here("expected comparison operator");
        }
        CompareOp op = compare_op_from_symbol(cur().text);
        ++pos_;
        if (next_is_attr_operand()) {
            AttrRef right = parse_attr_ref();
            if (left.atom == right.atom) {
                raise(ErrorKind::NotSupported,
                      "attribute comparison within one atom (" + left.text + ", " + right.text + ")");
            }
            if (op != CompareOp::Eq) {
                raise(ErrorKind::NotSupported, "theta-join");
            }
            auto type_of = [&](const AttrRef& r) {
                return catalog_.get(query_.atoms[r.atom].relation).schema()[r.column].type;
            };
            if (type_of(left) != type_of(right)) {
                raise(ErrorKind::NotSupported, "join between attributes of different types (" +
                                                   left.text + ", " + right.text + ")");
            }
            query_.join_conditions.push_back({left, right});
            return;
        }
        Value lit = parse_literal();
        Predicate pred;
        pred.attr = left;
        pred.op = op;
        pred.constant = lit;
        check_predicate_types(pred.attr, pred.constant);
        query_.atoms[left.atom].local_predicates.push_back(std::move(pred));
    }

    void parse_group_by() {
        while (true) {
            query_.group_by.push_back(parse_attr_ref());
            if (!accept_symbol(",")) break;
        }
    }

    void validate() {
        if (query_.aggregates.empty()) {
            raise(ErrorKind::Parse, "query must contain at least one aggregate");
        }
        for (const auto& sel : select_attrs_) {
            bool grouped = false;
            for (const auto& g : query_.group_by) {
                if (g == sel) grouped = true;
            }
            if (!grouped) {
                raise(ErrorKind::Resolve,
                      "selected attribute '" + sel.text + "' is not in GROUP BY");
            }
        }
    }
};

} // namespace

Query parse_query(const std::string& text, const Catalog& catalog) {
    return Parser(text, catalog).parse();
}

Query parse_query_file(const std::string& path, const Catalog& catalog) {
    std::ifstream in(path);
    if (!in) raise(ErrorKind::Io, "cannot open '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_query(buffer.str(), catalog);
}

std::string render_query(const Query& query) {
    std::string out = "SELECT ";
    bool first = true;
    for (const auto& g : query.group_by) {
        if (!first) out += ", ";
        first = false;
        out += g.text;
    }
    for (const auto& agg : query.aggregates) {
        if (!first) out += ", ";
        first = false;
        switch (agg.function) {
            case AggregateFunction::CountStar: out += "COUNT(*)"; break;
            case AggregateFunction::CountDistinct:
                out += "COUNT(DISTINCT " + agg.expr->render() + ")";
                break;
            case AggregateFunction::Percentile: {
                std::ostringstream frac;
                frac << agg.fraction;
                out += "PERCENTILE(" + frac.str() + ", " + agg.expr->render() + ")";
                break;
            }
            case AggregateFunction::Corr:
                out += "CORR(" + agg.expr->render() + ", " + agg.expr2->render() + ")";
                break;
            default:
                out += std::string(to_string(agg.function)) + "(" + agg.expr->render() + ")";
                break;
        }
        if (!agg.alias.empty()) out += " AS " + agg.alias;
    }
    out += " FROM ";
    for (size_t i = 0; i < query.atoms.size(); ++i) {
        if (i) out += ", ";
        out += query.atoms[i].relation;
        if (query.atoms[i].alias != query.atoms[i].relation) out += " " + query.atoms[i].alias;
    }
    std::vector<std::string> conditions;
    for (const auto& jc : query.join_conditions) {
        conditions.push_back(jc.left.text + " = " + jc.right.text);
    }
    for (const auto& atom : query.atoms) {
        for (const auto& pred : atom.local_predicates) conditions.push_back(pred.render());
    }
    if (!conditions.empty()) {
        out += " WHERE ";
        for (size_t i = 0; i < conditions.size(); ++i) {
            if (i) out += " AND ";
            out += conditions[i];
        }
    }
    if (!query.group_by.empty()) {
        out += " GROUP BY ";
        for (size_t i = 0; i < query.group_by.size(); ++i) {
            if (i) out += ", ";
            out += query.group_by[i].text;
        }
    }
    return out;
}

} // namespace aggjoin
