// SPDX-License-Identifier: Apache-2.0
#include "qtl/qwhile.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

namespace qtl {

// ---------------------------------------------------------------------------
// Constructors

namespace {

QwStmtPtr make(QwStmt s) { return std::make_shared<const QwStmt>(std::move(s)); }

} // namespace

QwStmtPtr make_skip() { return make(QwStmt{}); }

QwStmtPtr make_seq(QwStmtPtr a, QwStmtPtr b) {
  QwStmt s;
  s.kind = QwStmt::Seq;
  s.children = {std::move(a), std::move(b)};
  return make(std::move(s));
}

QwStmtPtr make_init(std::size_t q) {
  QwStmt s;
  s.kind = QwStmt::Init;
  s.qubits = {q};
  return make(std::move(s));
}

QwStmtPtr make_unitary(std::string op, std::vector<std::size_t> qs) {
  QwStmt s;
  s.kind = QwStmt::Unitary;
  s.op = std::move(op);
  s.qubits = std::move(qs);
  return make(std::move(s));
}

QwStmtPtr make_case(std::string op, std::vector<std::size_t> qs,
                    std::vector<QwStmtPtr> branches) {
  QwStmt s;
  s.kind = QwStmt::Case;
  s.op = std::move(op);
  s.qubits = std::move(qs);
  s.children = std::move(branches);
  return make(std::move(s));
}

QwStmtPtr make_while(std::string op, std::vector<std::size_t> qs, QwStmtPtr body) {
  QwStmt s;
  s.kind = QwStmt::While;
  s.op = std::move(op);
  s.qubits = std::move(qs);
  s.children = {std::move(body)};
  return make(std::move(s));
}

bool same_shape(const QwStmt &a, const QwStmt &b) {
  if (a.kind != b.kind || a.op != b.op || a.qubits != b.qubits ||
      a.children.size() != b.children.size())
    return false;
  for (std::size_t i = 0; i < a.children.size(); ++i)
    if (!same_shape(*a.children[i], *b.children[i]))
      return false;
  return true;
}

// ---------------------------------------------------------------------------
// Parser

namespace {

const std::set<std::string> kKeywords = {
    "qubits", "unitary", "measurement", "state", "skip", "apply", "to",
    "if",     "meas",    "while",       "sqrt"};

class Parser {
public:
  explicit Parser(const std::string &src) : src_(src) {}

  QWhileAst parse() {
    QWhileAst ast;
    bool declared = false;
    while (true) {
      skip_ws();
      std::string w = peek_word();
      if (w == "qubits") {
        if (declared)
          fail("qubits declared twice");
        take_word();
        parse_qubits(ast);
        declared = true;
      } else if (w == "unitary" || w == "measurement") {
        if (!declared)
          default_qubits(ast), declared = true;
        take_word();
        parse_operator(ast, w == "unitary");
      } else if (w == "state") {
        if (!declared)
          default_qubits(ast), declared = true;
        take_word();
        expect("=");
        Mat rho = matrix();
        if (rho.rows() != ast.dim() || !is_psd(rho) || rho.trace() != CRat(1))
          fail("state must be a density operator on the declared qubits");
        ast.input_state = rho;
        expect(";");
      } else {
        break;
      }
    }
    if (!declared)
      default_qubits(ast);
    ast_ = &ast;
    ast.body = parse_seq();
    skip_ws();
    if (pos_ < src_.size())
      fail("unexpected trailing input");
    return ast;
  }

private:
  const std::string &src_;
  std::size_t pos_ = 0;
  int line_ = 1, col_ = 1;
  const QWhileAst *ast_ = nullptr;

  [[noreturn]] void fail(const std::string &msg) const {
    throw SyntaxError("line " + std::to_string(line_) + ", column " +
                      std::to_string(col_) + ": " + msg);
  }

  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_ws() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else if (c == '#' ||
                 (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '/')) {
        while (pos_ < src_.size() && src_[pos_] != '\n')
          advance();
      } else {
        break;
      }
    }
  }

  static bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  }

  std::string peek_word() {
    skip_ws();
    std::size_t p = pos_;
    if (p >= src_.size() ||
        !(std::isalpha(static_cast<unsigned char>(src_[p])) || src_[p] == '_'))
      return "";
    while (p < src_.size() && ident_char(src_[p]))
      ++p;
    return src_.substr(pos_, p - pos_);
  }

  std::string take_word() {
    std::string w = peek_word();
    if (w.empty())
      fail("expected an identifier");
    for (std::size_t k = 0; k < w.size(); ++k)
      advance();
    return w;
  }

  std::string ident() {
    std::string w = take_word();
    if (kKeywords.count(w))
      fail("keyword '" + w + "' cannot be used as a name");
    return w;
  }

  bool at(const std::string &tok) {
    skip_ws();
    return src_.compare(pos_, tok.size(), tok) == 0;
  }

  void expect(const std::string &tok) {
    if (!at(tok))
      fail("expected '" + tok + "'");
    for (std::size_t k = 0; k < tok.size(); ++k)
      advance();
  }

  void expect_word(const std::string &w) {
    if (peek_word() != w)
      fail("expected '" + w + "'");
    take_word();
  }

  std::size_t integer() {
    skip_ws();
    std::size_t p = pos_;
    while (p < src_.size() && std::isdigit(static_cast<unsigned char>(src_[p])))
      ++p;
    if (p == pos_)
      fail("expected an integer");
    std::size_t v = std::stoul(src_.substr(pos_, p - pos_));
    while (pos_ < p)
      advance();
    return v;
  }

  void default_qubits(QWhileAst &ast) {
    ast.nqubits = 1;
    ast.qubit_names = {"q"};
  }

  void parse_qubits(QWhileAst &ast) {
    skip_ws();
    if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
      std::size_t n = integer();
      if (n == 0 || n > 10)
        fail("qubit count must be between 1 and 10");
      ast.nqubits = n;
      if (n == 1)
        ast.qubit_names = {"q"};
      else
        for (std::size_t i = 0; i < n; ++i)
          ast.qubit_names.push_back("q" + std::to_string(i));
    } else {
      do {
        std::string name = ident();
        if (std::find(ast.qubit_names.begin(), ast.qubit_names.end(), name) !=
            ast.qubit_names.end())
          fail("qubit '" + name + "' declared twice");
        ast.qubit_names.push_back(name);
      } while (at(",") && (expect(","), true));
      ast.nqubits = ast.qubit_names.size();
      if (ast.nqubits > 10)
        fail("at most 10 qubits are supported");
    }
    expect(";");
  }

  CRat entry() {
    skip_ws();
    std::string raw;
    while (pos_ < src_.size() && src_[pos_] != ',' && src_[pos_] != ']') {
      if (!std::isspace(static_cast<unsigned char>(src_[pos_])))
        raw.push_back(src_[pos_]);
      advance();
    }
    try {
      return parse_crat(raw);
    } catch (const ParseError &e) {
      fail(std::string("bad matrix entry: ") + e.what());
    }
  }

  Mat matrix() {
    expect("[");
    std::vector<std::vector<CRat>> rows;
    do {
      expect("[");
      std::vector<CRat> row;
      do {
        row.push_back(entry());
      } while (at(",") && (expect(","), true));
      expect("]");
      rows.push_back(std::move(row));
    } while (at(",") && (expect(","), true));
    expect("]");
    std::vector<CRat> flat;
    for (const auto &r : rows) {
      if (r.size() != rows[0].size())
        fail("ragged matrix");
      flat.insert(flat.end(), r.begin(), r.end());
    }
    return Mat(rows.size(), rows[0].size(), std::move(flat));
  }

  std::pair<Rational, Mat> parse_weighted_matrix() {
    Rational w = 1;
    if (peek_word() == "sqrt") {
      take_word();
      expect("(");
      skip_ws();
      std::string raw;
      while (pos_ < src_.size() && src_[pos_] != ')') {
        if (!std::isspace(static_cast<unsigned char>(src_[pos_])))
          raw.push_back(src_[pos_]);
        advance();
      }
      try {
        w = parse_rational(raw);
      } catch (const ParseError &e) {
        fail(std::string("bad weight: ") + e.what());
      }
      if (sgn(w) <= 0)
        fail("weight must be positive");
      expect(")");
      expect("*");
    }
    return {w, matrix()};
  }

  std::size_t arity_of(const Mat &m) {
    if (!m.square())
      fail("operator must be square");
    std::size_t k = 0;
    while ((std::size_t(1) << k) < m.rows())
      ++k;
    if ((std::size_t(1) << k) != m.rows() || k == 0)
      fail("operator dimension must be a power of two");
    return k;
  }

  void parse_operator(QWhileAst &ast, bool is_unitary) {
    std::string name = ident();
    if (ast.unitaries.count(name) || ast.measurements.count(name))
      fail("operator '" + name + "' declared twice");
    expect("=");
    QwOperator op;
    if (is_unitary) {
      auto [w, m] = parse_weighted_matrix();
      op.arity = arity_of(m);
      if (CRat(w) * (m.adjoint() * m) != Mat::identity(m.rows()))
        fail("'" + name + "' is not unitary");
      op.ops.push_back({w, m});
      if (op.arity > ast.nqubits)
        throw ArityMismatch("'" + name + "' acts on more qubits than declared");
      ast.unitaries[name] = std::move(op);
    } else {
      expect("{");
      do {
        auto [w, m] = parse_weighted_matrix();
        std::size_t k = arity_of(m);
        if (!op.ops.empty() && k != op.arity)
          fail("measurement operators of '" + name + "' differ in size");
        op.arity = k;
        op.ops.push_back({w, m});
      } while (at(",") && (expect(","), true));
      expect("}");
      if (kraus_gram(op.ops) != Mat::identity(op.ops[0].op.rows()))
        fail("measurement '" + name + "' is not complete");
      if (op.arity > ast.nqubits)
        throw ArityMismatch("'" + name + "' acts on more qubits than declared");
      ast.measurements[name] = std::move(op);
    }
    expect(";");
  }

  std::size_t qubit() {
    std::string name = ident();
    const auto &names = ast_->qubit_names;
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name)
        return i;
    if (names.size() > 1 || name != "q0")
      fail("unknown qubit '" + name + "'");
    return 0;
  }

  std::vector<std::size_t> qlist() {
    std::vector<std::size_t> qs;
    do {
      qs.push_back(qubit());
    } while (at(",") && (expect(","), true));
    std::set<std::size_t> uniq(qs.begin(), qs.end());
    if (uniq.size() != qs.size())
      throw ArityMismatch("repeated qubit in operand list");
    return qs;
  }

  const QwOperator &lookup(const std::map<std::string, QwOperator> &table,
                           const std::string &name, const char *what) {
    auto it = table.find(name);
    if (it == table.end())
      throw UndeclaredOperator(std::string(what) + " '" + name +
                               "' is not declared");
    return it->second;
  }

  void check_arity(const QwOperator &op, const std::string &name,
                   std::size_t got) {
    if (op.arity != got)
      throw ArityMismatch("'" + name + "' acts on " + std::to_string(op.arity) +
                          " qubit(s), got " + std::to_string(got));
  }

  QwStmtPtr parse_seq() {
    QwStmtPtr first = parse_stmt();
    skip_ws();
    if (!at(";"))
      return first;
    expect(";");
    skip_ws();
    if (pos_ >= src_.size() || at("}"))
      return first;
    return make_seq(first, parse_seq());
  }

  QwStmtPtr parse_stmt() {
    skip_ws();
    int line = line_, col = col_;
    QwStmtPtr s = parse_stmt_inner();
    auto *raw = const_cast<QwStmt *>(s.get());
    if (raw->line == 0) {
      raw->line = line;
      raw->col = col;
    }
    return s;
  }

  QwStmtPtr parse_stmt_inner() {
    if (at("{")) {
      expect("{");
      QwStmtPtr s = parse_seq();
      expect("}");
      return s;
    }
    std::string w = peek_word();
    if (w.empty())
      fail("expected a statement");
    if (w == "skip") {
      take_word();
      return make_skip();
    }
    if (w == "apply") {
      take_word();
      std::string name = ident();
      const QwOperator &op = lookup(ast_->unitaries, name, "unitary");
      expect_word("to");
      auto qs = qlist();
      check_arity(op, name, qs.size());
      return make_unitary(name, qs);
    }
    if (w == "if" || w == "while") {
      take_word();
      expect_word("meas");
      std::string name = ident();
      const QwOperator &op = lookup(ast_->measurements, name, "measurement");
      expect("(");
      auto qs = qlist();
      expect(")");
      check_arity(op, name, qs.size());
      if (w == "while") {
        if (op.ops.size() != 2)
          throw ArityMismatch("while needs a two-outcome measurement, '" + name +
                              "' has " + std::to_string(op.ops.size()));
        expect("==");
        if (integer() != 1)
          fail("while guard must compare with 1");
        expect("{");
        QwStmtPtr body = parse_seq();
        expect("}");
        return make_while(name, qs, body);
      }
      expect("{");
      std::vector<QwStmtPtr> branches(op.ops.size());
      while (!at("}")) {
        std::size_t m = integer();
        if (m >= branches.size())
          throw ArityMismatch("outcome " + std::to_string(m) + " out of range for '" +
                              name + "'");
        if (branches[m])
          fail("outcome " + std::to_string(m) + " given twice");
        expect("->");
        branches[m] = parse_stmt();
        if (at(";"))
          expect(";");
        else if (!at("}"))
          fail("expected ';' or '}'");
      }
      expect("}");
      for (const auto &b : branches)
        if (!b)
          throw ArityMismatch("if over '" + name + "' must give a branch for all " +
                              std::to_string(branches.size()) + " outcomes");
      return make_case(name, qs, std::move(branches));
    }
    // q := |0>
    std::size_t q = qubit();
    expect(":=");
    expect("|0>");
    return make_init(q);
  }
};

std::string matrix_text(const Mat &m) {
  std::string s = "[";
  for (std::size_t i = 0; i < m.rows(); ++i) {
    s += (i ? ",[" : "[");
    for (std::size_t j = 0; j < m.cols(); ++j)
      s += (j ? "," : "") + to_string(m(i, j));
    s += "]";
  }
  return s + "]";
}

std::string weighted_text(const KrausOp &k) {
  if (k.weight == 1)
    return matrix_text(k.op);
  return "sqrt(" + to_string(k.weight) + ") * " + matrix_text(k.op);
}

} // namespace

QWhileAst parse_qwhile(const std::string &source) { return Parser(source).parse(); }

std::string pretty_print(const QWhileAst &ast, const QwStmt &s) {
  auto qs = [&](const std::vector<std::size_t> &v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i)
      out += (i ? ", " : "") + ast.qubit_names.at(v[i]);
    return out;
  };
  switch (s.kind) {
  case QwStmt::Skip:
    return "skip";
  case QwStmt::Init:
    return ast.qubit_names.at(s.qubits[0]) + " := |0>";
  case QwStmt::Unitary:
    return "apply " + s.op + " to " + qs(s.qubits);
  case QwStmt::Seq: {
    std::string a = pretty_print(ast, *s.children[0]);
    if (s.children[0]->kind == QwStmt::Seq)
      a = "{ " + a + " }";
    return a + "; " + pretty_print(ast, *s.children[1]);
  }
  case QwStmt::Case: {
    std::string out = "if meas " + s.op + "(" + qs(s.qubits) + ") { ";
    for (std::size_t m = 0; m < s.children.size(); ++m) {
      std::string b = pretty_print(ast, *s.children[m]);
      if (s.children[m]->kind == QwStmt::Seq)
        b = "{ " + b + " }";
      out += std::to_string(m) + " -> " + b + "; ";
    }
    return out + "}";
  }
  case QwStmt::While:
    return "while meas " + s.op + "(" + qs(s.qubits) + ") == 1 { " +
           pretty_print(ast, *s.children[0]) + " }";
  }
  return "";
}

std::string pretty_print(const QWhileAst &ast) {
  std::ostringstream os;
  os << "qubits ";
  for (std::size_t i = 0; i < ast.qubit_names.size(); ++i)
    os << (i ? ", " : "") << ast.qubit_names[i];
  os << ";\n";
  for (const auto &[name, op] : ast.unitaries)
    os << "unitary " << name << " = " << weighted_text(op.ops[0]) << ";\n";
  for (const auto &[name, op] : ast.measurements) {
    os << "measurement " << name << " = {";
    for (std::size_t k = 0; k < op.ops.size(); ++k)
      os << (k ? ", " : "") << weighted_text(op.ops[k]);
    os << "};\n";
  }
  if (ast.input_state)
    os << "state = " << matrix_text(*ast.input_state) << ";\n";
  os << pretty_print(ast, *ast.body) << "\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Semantics

Mat lift_operator(const Mat &a, const std::vector<std::size_t> &targets,
                  std::size_t nqubits) {
  const std::size_t k = targets.size();
  if (a.rows() != (std::size_t(1) << k) || !a.square())
    throw ArityMismatch("operator size does not match its operand count");
  const std::size_t N = std::size_t(1) << nqubits;
  std::size_t mask = 0;
  for (auto t : targets) {
    if (t >= nqubits)
      throw ArityMismatch("qubit index out of range");
    mask |= std::size_t(1) << (nqubits - 1 - t);
  }
  auto sub = [&](std::size_t r) {
    std::size_t v = 0;
    for (auto t : targets)
      v = (v << 1) | ((r >> (nqubits - 1 - t)) & 1u);
    return v;
  };
  Mat f(N, N);
  for (std::size_t r = 0; r < N; ++r)
    for (std::size_t c = 0; c < N; ++c)
      if ((r & ~mask) == (c & ~mask))
        f(r, c) = a(sub(r), sub(c));
  return f;
}

namespace {

std::vector<KrausOp> init_kraus(std::size_t q, std::size_t n) {
  return {{Rational(1), lift_operator(Mat::unit(2, 0, 0), {q}, n)},
          {Rational(1), lift_operator(Mat::unit(2, 0, 1), {q}, n)}};
}

std::vector<KrausOp> lifted(const QwOperator &op, const std::vector<std::size_t> &qs,
                            std::size_t n) {
  std::vector<KrausOp> out;
  for (const auto &k : op.ops)
    out.push_back({k.weight, lift_operator(k.op, qs, n)});
  return out;
}

Mat sandwich(const KrausOp &k, const Mat &rho) {
  return CRat(k.weight) * (k.op * rho * k.op.adjoint());
}

Mat denote(const QWhileAst &ast, const QwStmt &s, const Mat &rho,
           std::size_t depth, bool &exhausted) {
  const std::size_t n = ast.nqubits;
  switch (s.kind) {
  case QwStmt::Skip:
    return rho;
  case QwStmt::Init: {
    Mat out = Mat::zero(rho.rows(), rho.cols());
    for (const auto &k : init_kraus(s.qubits[0], n))
      out += sandwich(k, rho);
    return out;
  }
  case QwStmt::Unitary:
    return sandwich(lifted(ast.unitaries.at(s.op), s.qubits, n)[0], rho);
  case QwStmt::Seq:
    return denote(ast, *s.children[1],
                  denote(ast, *s.children[0], rho, depth, exhausted), depth,
                  exhausted);
  case QwStmt::Case: {
    auto ms = lifted(ast.measurements.at(s.op), s.qubits, n);
    Mat out = Mat::zero(rho.rows(), rho.cols());
    for (std::size_t m = 0; m < ms.size(); ++m)
      out += denote(ast, *s.children[m], sandwich(ms[m], rho), depth, exhausted);
    return out;
  }
  case QwStmt::While: {
    auto ms = lifted(ast.measurements.at(s.op), s.qubits, n);
    // n-th syntactic unrolling: at most `depth` guard evaluations, and the
    // body only runs when another evaluation is still allowed.
    Mat out = Mat::zero(rho.rows(), rho.cols());
    Mat live = rho;
    for (std::size_t i = 0; i < depth && !live.is_zero(); ++i) {
      out += sandwich(ms[0], live);
      live = sandwich(ms[1], live);
      if (i + 1 < depth)
        live = denote(ast, *s.children[0], live, depth, exhausted);
    }
    if (!live.is_zero())
      exhausted = true;
    return out;
  }
  }
  return rho;
}

} // namespace

BoundedResult denote_bounded(const QWhileAst &ast, const Mat &rho,
                             std::size_t depth) {
  if (rho.rows() != ast.dim() || !rho.square())
    throw DimensionMismatch("input state does not match the qubit register");
  if (!is_psd(rho))
    throw NotPositive("input state must be positive semidefinite");
  BoundedResult r;
  r.state = denote(ast, *ast.body, rho, depth, r.depth_exhausted);
  return r;
}

// ---------------------------------------------------------------------------
// Compilation

namespace {

struct Hole {
  std::size_t loc, outcome;
};

class Compiler {
public:
  explicit Compiler(const QWhileAst &ast) : ast_(ast) {}

  SequentialProgram run(const Mat &input) {
    auto [entry, holes] = emit(*ast_.body);
    std::size_t exit = add(SuperOp::identity(ast_.dim()),
                           Measurement::trivial(ast_.dim()));
    acts_[exit].next[0] = {Target{exit, 0}};
    patch(holes, exit);
    SequentialProgram p;
    p.dim = ast_.dim();
    for (std::size_t i = 0; i < acts_.size(); ++i)
      p.locations.push_back("l" + std::to_string(i + 1));
    p.act = std::move(acts_);
    p.initial_state = input;
    p.initial_location = entry;
    p.exit_location = exit;
    p.validate();
    return p;
  }

private:
  const QWhileAst &ast_;
  std::vector<LocationAct> acts_;

  std::size_t add(SuperOp ch, Measurement m) {
    LocationAct a;
    a.channel = std::move(ch);
    a.next.assign(m.outcomes(), {});
    a.measurement = std::move(m);
    acts_.push_back(std::move(a));
    return acts_.size() - 1;
  }

  void patch(const std::vector<Hole> &holes, std::size_t target) {
    for (const auto &h : holes)
      acts_[h.loc].next[h.outcome] = {Target{target, 0}};
  }

  std::pair<std::size_t, std::vector<Hole>> emit(const QwStmt &s) {
    const std::size_t d = ast_.dim(), n = ast_.nqubits;
    switch (s.kind) {
    case QwStmt::Skip: {
      std::size_t l = add(SuperOp::identity(d), Measurement::trivial(d));
      return {l, {{l, 0}}};
    }
    case QwStmt::Init: {
      std::size_t l = add(SuperOp(d, d, init_kraus(s.qubits[0], n)),
                          Measurement::trivial(d));
      return {l, {{l, 0}}};
    }
    case QwStmt::Unitary: {
      std::size_t l = add(SuperOp(d, d, lifted(ast_.unitaries.at(s.op), s.qubits, n)),
                          Measurement::trivial(d));
      return {l, {{l, 0}}};
    }
    case QwStmt::Seq: {
      auto [e1, h1] = emit(*s.children[0]);
      auto [e2, h2] = emit(*s.children[1]);
      patch(h1, e2);
      return {e1, h2};
    }
    case QwStmt::Case: {
      std::size_t l = add(SuperOp::identity(d),
                          Measurement(lifted(ast_.measurements.at(s.op), s.qubits, n)));
      std::vector<Hole> holes;
      for (std::size_t m = 0; m < s.children.size(); ++m) {
        auto [e, h] = emit(*s.children[m]);
        acts_[l].next[m] = {Target{e, 0}};
        holes.insert(holes.end(), h.begin(), h.end());
      }
      return {l, holes};
    }
    case QwStmt::While: {
      std::size_t l = add(SuperOp::identity(d),
                          Measurement(lifted(ast_.measurements.at(s.op), s.qubits, n)));
      auto [e, h] = emit(*s.children[0]);
      acts_[l].next[1] = {Target{e, 0}};
      patch(h, l);
      return {l, {{l, 0}}};
    }
    }
    throw MalformedProgram("unknown statement kind");
  }
};

std::size_t steps(const QwStmt &s, std::size_t n) {
  switch (s.kind) {
  case QwStmt::Skip:
  case QwStmt::Init:
  case QwStmt::Unitary:
    return 1;
  case QwStmt::Seq:
    return steps(*s.children[0], n) + steps(*s.children[1], n);
  case QwStmt::Case: {
    std::size_t m = 0;
    for (const auto &c : s.children)
      m = std::max(m, steps(*c, n));
    return 1 + m;
  }
  case QwStmt::While:
    return n == 0 ? 0 : n + (n - 1) * steps(*s.children[0], n);
  }
  return 0;
}

std::size_t count_loops(const QwStmt &s) {
  std::size_t k = s.kind == QwStmt::While ? 1 : 0;
  for (const auto &c : s.children)
    k += count_loops(*c);
  return k;
}

// Every run's duration is a strictly increasing function of the single
// loop's iteration count: one loop at most, not under a branch, and all
// branches of every `if` loop-free with equal duration.
bool uniform_timing(const QwStmt &s) {
  switch (s.kind) {
  case QwStmt::Case: {
    std::size_t t = steps(*s.children[0], 0);
    for (const auto &c : s.children)
      if (count_loops(*c) != 0 || steps(*c, 0) != t || !uniform_timing(*c))
        return false;
    return true;
  }
  default:
    for (const auto &c : s.children)
      if (!uniform_timing(*c))
        return false;
    return true;
  }
}

} // namespace

std::size_t CompiledProgram::steps_for_depth(std::size_t n) const {
  return steps(*source, n);
}

CompiledProgram compile(const QWhileAst &ast, const Mat &input) {
  CompiledProgram out;
  out.program = Compiler(ast).run(input);
  out.source = ast.body;
  out.timing_exact = count_loops(*ast.body) <= 1 && uniform_timing(*ast.body);
  return out;
}

CompiledProgram compile(const QWhileAst &ast) {
  if (ast.input_state)
    return compile(ast, *ast.input_state);
  return compile(ast, Mat::unit(ast.dim(), 0, 0));
}

// ---------------------------------------------------------------------------
// Single-loop normal form

WhileNormalForm bohm_jacopini(const SequentialProgram &p) {
  if (!p.exit_location)
    throw NoExitLocation("normal form needs an exit location");
  WhileNormalForm nf;
  nf.model = flatten(p);
  nf.body_channel = step_superop(nf.model);
  nf.m0 = config_projector(nf.model, {*nf.model.exit_config});
  nf.m1 = Mat::identity(nf.model.embedded_dim()) - nf.m0;
  nf.initial_state = embed(nf.model, initial_cqstate(nf.model));
  return nf;
}

std::vector<Mat> normal_form_exit_trace(const WhileNormalForm &nf,
                                        std::size_t kmax) {
  std::vector<Mat> out;
  const Mat &rho = nf.initial_state;
  Mat acc = nf.m0 * rho * nf.m0;
  Mat live = nf.m1 * rho * nf.m1;
  out.push_back(acc);
  for (std::size_t k = 0; k < kmax; ++k) {
    live = apply(nf.body_channel, live);
    acc += nf.m0 * live * nf.m0;
    live = nf.m1 * live * nf.m1;
    out.push_back(acc);
  }
  return out;
}

Mat normal_form_exit(const WhileNormalForm &nf, std::size_t k) {
  return normal_form_exit_trace(nf, k).back();
}

} // namespace qtl
