// SPDX-License-Identifier: Apache-2.0
#include "qtl/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace qtl::io {

namespace {

Rational rational_from_json(const json &j) {
  if (j.is_string())
    return parse_rational(j.get<std::string>());
  if (j.is_number_integer())
    return Rational(j.get<long>());
  throw ParseError("expected a rational string or integer, got " + j.dump());
}

const json &field(const json &j, const char *key) {
  if (!j.is_object() || !j.contains(key))
    throw ParseError(std::string("missing field '") + key + "'");
  return j.at(key);
}

std::size_t index_field(const json &j, const char *key) {
  const json &v = field(j, key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long>() >= 0))
    throw ParseError(std::string("field '") + key + "' must be a nonnegative integer");
  return v.get<std::size_t>();
}

std::size_t label_index(const std::vector<std::string> &labels, const json &j) {
  if (j.is_string()) {
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == j.get<std::string>())
        return i;
    throw MalformedProgram("unknown location '" + j.get<std::string>() + "'");
  }
  if (j.is_number_unsigned() && j.get<std::size_t>() < labels.size())
    return j.get<std::size_t>();
  throw MalformedProgram("bad location reference " + j.dump());
}

// Location table shared by both program kinds. `scheduled` selects the
// [loc, scheduler] next-entry form.
std::vector<LocationAct> acts_from_json(const json &j, const std::vector<std::string> &labels,
                                        std::size_t dim, bool scheduled) {
  std::vector<LocationAct> acts(labels.size());
  const json &act = j;
  if (!act.is_object())
    throw ParseError("'act' must be an object keyed by location");
  for (std::size_t l = 0; l < labels.size(); ++l) {
    if (!act.contains(labels[l]))
      throw MalformedProgram("no action for location '" + labels[l] + "'");
    const json &a = act.at(labels[l]);
    acts[l].channel = SuperOp(dim, dim, kraus_from_json(field(a, "kraus")));
    acts[l].measurement = Measurement(kraus_from_json(field(a, "measurement")));
    const json &next = field(a, "next");
    std::size_t outcomes = acts[l].measurement.outcomes();
    acts[l].next.resize(outcomes);
    for (auto it = next.begin(); it != next.end(); ++it) {
      std::size_t m = std::stoul(it.key());
      if (m >= outcomes)
        throw MalformedProgram("outcome " + it.key() + " out of range at '" + labels[l] + "'");
      for (const auto &t : it.value()) {
        Target tg;
        if (scheduled) {
          if (!t.is_array() || t.size() != 2)
            throw ParseError("concurrent next entries are [location, scheduler]");
          tg.loc = label_index(labels, t[0]);
          std::size_t s = t[1].get<std::size_t>();
          if (s == 0)
            throw MalformedProgram("scheduler indices start at 1");
          tg.sched = s - 1;
        } else {
          tg.loc = label_index(labels, t);
        }
        acts[l].next[m].push_back(tg);
      }
    }
  }
  return acts;
}

json acts_to_json(const std::vector<LocationAct> &acts, const std::vector<std::string> &labels,
                  bool scheduled) {
  json out = json::object();
  for (std::size_t l = 0; l < acts.size(); ++l) {
    json a;
    a["kraus"] = kraus_to_json(acts[l].channel.kraus());
    a["measurement"] = kraus_to_json(acts[l].measurement.operators());
    json next = json::object();
    for (std::size_t m = 0; m < acts[l].next.size(); ++m) {
      json ts = json::array();
      for (const auto &t : acts[l].next[m]) {
        if (scheduled)
          ts.push_back(json::array({labels[t.loc], t.sched + 1}));
        else
          ts.push_back(labels[t.loc]);
      }
      next[std::to_string(m)] = ts;
    }
    a["next"] = next;
    out[labels[l]] = a;
  }
  return out;
}

std::vector<std::string> labels_from_json(const json &j) {
  std::vector<std::string> labels;
  for (const auto &l : field(j, "locations"))
    labels.push_back(l.get<std::string>());
  return labels;
}

json double_or_null(double v) {
  if (std::isfinite(v))
    return v;
  return nullptr;
}

} // namespace

json to_json(const CRat &z) {
  if (z.is_real())
    return to_string(z.re);
  return json::array({to_string(z.re), to_string(z.im)});
}

CRat crat_from_json(const json &j) {
  if (j.is_array()) {
    if (j.size() != 2)
      throw ParseError("complex entry must be [re, im]");
    return CRat(rational_from_json(j[0]), rational_from_json(j[1]));
  }
  return CRat(rational_from_json(j));
}

json to_json(const Mat &m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (std::size_t k = 0; k < m.cols(); ++k)
      row.push_back(to_json(m(i, k)));
    rows.push_back(row);
  }
  return rows;
}

Mat mat_from_json(const json &j) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw ParseError("matrix must be a nonempty array of rows");
  const std::size_t r = j.size(), c = j[0].size();
  Mat m(r, c);
  for (std::size_t i = 0; i < r; ++i) {
    if (!j[i].is_array() || j[i].size() != c)
      throw ParseError("ragged matrix row " + std::to_string(i));
    for (std::size_t k = 0; k < c; ++k)
      m(i, k) = crat_from_json(j[i][k]);
  }
  return m;
}

json kraus_to_json(const std::vector<KrausOp> &ops) {
  json out = json::array();
  for (const auto &k : ops) {
    if (k.weight == 1)
      out.push_back(to_json(k.op));
    else
      out.push_back({{"weight", to_string(k.weight)}, {"matrix", to_json(k.op)}});
  }
  return out;
}

std::vector<KrausOp> kraus_from_json(const json &j) {
  if (!j.is_array())
    throw ParseError("Kraus list must be an array");
  std::vector<KrausOp> ops;
  for (const auto &e : j) {
    KrausOp k;
    if (e.is_object()) {
      k.weight = rational_from_json(field(e, "weight"));
      k.op = mat_from_json(field(e, "matrix"));
    } else {
      k.op = mat_from_json(e);
    }
    ops.push_back(std::move(k));
  }
  return ops;
}

json to_json(const SuperOp &e) { return {{"kraus", kraus_to_json(e.kraus())}}; }

SuperOp superop_from_json(const json &j, std::size_t dim) {
  return SuperOp(dim, dim, kraus_from_json(j.is_object() ? field(j, "kraus") : j));
}

json to_json(const Subspace &s) {
  json basis = json::array();
  for (const auto &v : s.basis()) {
    json col = json::array();
    for (std::size_t i = 0; i < v.rows(); ++i)
      col.push_back(to_json(v(i, 0)));
    basis.push_back(col);
  }
  return {{"dim", s.ambient_dim()}, {"basis", basis}};
}

Subspace subspace_from_json(const json &j, std::size_t dim) {
  if (j.is_string()) {
    if (j == "full")
      return Subspace::full(dim);
    if (j == "zero")
      return Subspace::zero(dim);
    throw ParseError("subspace string must be 'full' or 'zero'");
  }
  if (j.contains("dim") && j.at("dim").get<std::size_t>() != dim)
    throw DimensionMismatch("subspace dim " + j.at("dim").dump() + ", expected " +
                            std::to_string(dim));
  std::vector<Mat> vs;
  for (const auto &v : field(j, "basis")) {
    if (!v.is_array() || v.size() != dim)
      throw DimensionMismatch("basis vector of wrong length");
    std::vector<CRat> entries;
    for (const auto &e : v)
      entries.push_back(crat_from_json(e));
    vs.push_back(Mat::column(std::move(entries)));
  }
  return Subspace::from_vectors(dim, vs);
}

json to_json(const SubspaceUnion &u) {
  json members = json::array();
  for (const auto &s : u.members())
    members.push_back(to_json(s));
  return {{"dim", u.ambient_dim()}, {"members", members}};
}

json to_json(const SequentialProgram &p) {
  json j;
  j["dimension"] = p.dim;
  j["locations"] = p.locations;
  j["initial_location"] = p.locations.at(p.initial_location);
  if (p.exit_location)
    j["exit_location"] = p.locations.at(*p.exit_location);
  j["initial_state"] = to_json(p.initial_state);
  j["act"] = acts_to_json(p.act, p.locations, false);
  return j;
}

json to_json(const ConcurrentProgram &p) {
  json j;
  j["dimension"] = p.dim;
  j["initial_state"] = to_json(p.initial_state);
  json procs = json::array();
  for (std::size_t s = 0; s < p.processes.size(); ++s) {
    const Process &pr = p.processes[s];
    json pj;
    pj["locations"] = pr.locations;
    pj["initial_location"] = pr.locations.at(p.initial_locations.at(s));
    pj["act"] = acts_to_json(pr.act, pr.locations, true);
    procs.push_back(pj);
  }
  j["processes"] = procs;
  j["initial_scheduler"] = p.initial_scheduler + 1;
  return j;
}

std::variant<SequentialProgram, ConcurrentProgram> program_from_json(const json &j) {
  const std::size_t dim = index_field(j, "dimension");
  Mat rho = mat_from_json(field(j, "initial_state"));
  if (j.contains("processes")) {
    ConcurrentProgram p;
    p.dim = dim;
    p.initial_state = rho;
    for (const auto &pj : j.at("processes")) {
      Process pr;
      pr.locations = labels_from_json(pj);
      pr.act = acts_from_json(field(pj, "act"), pr.locations, dim, true);
      p.initial_locations.push_back(label_index(pr.locations, field(pj, "initial_location")));
      p.processes.push_back(std::move(pr));
    }
    std::size_t s = j.value("initial_scheduler", std::size_t(1));
    if (s == 0)
      throw MalformedProgram("scheduler indices start at 1");
    p.initial_scheduler = s - 1;
    p.validate();
    return p;
  }
  SequentialProgram p;
  p.dim = dim;
  p.initial_state = rho;
  p.locations = labels_from_json(j);
  p.act = acts_from_json(field(j, "act"), p.locations, dim, false);
  p.initial_location = label_index(p.locations, field(j, "initial_location"));
  if (j.contains("exit_location") && !j.at("exit_location").is_null())
    p.exit_location = label_index(p.locations, j.at("exit_location"));
  p.validate();
  return p;
}

json to_json(const CQState &s, const FlatModel &m) {
  json blocks = json::object();
  for (const auto &[c, rho] : s.blocks) {
    json b;
    b["state"] = to_json(rho);
    b["trace"] = to_string(rho.trace().re);
    blocks[m.labels.at(c)] = b;
  }
  return blocks;
}

json to_json(const WhileNormalForm &nf) {
  json j;
  j["dimension"] = nf.model.embedded_dim();
  j["configurations"] = nf.model.labels;
  j["body"] = to_json(nf.body_channel);
  j["m0"] = to_json(nf.m0);
  j["m1"] = to_json(nf.m1);
  j["initial_state"] = to_json(nf.initial_state);
  return j;
}

AtomTable atoms_from_json(const json &j, const FlatModel &model) {
  std::vector<json> items;
  if (j.is_array())
    items.assign(j.begin(), j.end());
  else if (j.is_object() && j.contains("atoms"))
    items.assign(j.at("atoms").begin(), j.at("atoms").end());
  else
    items.push_back(j);
  AtomTable table;
  for (const auto &a : items) {
    std::string name = field(a, "name").get<std::string>();
    std::map<std::string, Subspace> blocks;
    const json &bj = field(a, "blocks");
    for (auto it = bj.begin(); it != bj.end(); ++it)
      blocks[it.key()] = subspace_from_json(it.value(), model.dim);
    table[name] = atom_from_blocks(name, blocks, model);
  }
  return table;
}

json to_json(const Witness &w) {
  json j;
  j["word"] = w.word;
  if (!w.loop.empty())
    j["loop"] = w.loop;
  j["step"] = w.step;
  if (w.state)
    j["state"] = to_json(*w.state);
  if (!w.note.empty())
    j["note"] = w.note;
  return j;
}

json to_json(const Verdict &v) {
  json j;
  j["status"] = to_string(v.status);
  if (v.witness)
    j["witness"] = to_json(*v.witness);
  if (v.certificate)
    j["certificate"] = to_json(*v.certificate);
  json d;
  d["chain_depth"] = v.diagnostics.chain_depth;
  json vals = json::object();
  for (const auto &[k, x] : v.diagnostics.values)
    vals[k] = double_or_null(x);
  d["values"] = vals;
  if (!v.diagnostics.reason.empty())
    d["reason"] = v.diagnostics.reason;
  j["diagnostics"] = d;
  return j;
}

json to_json(const ReachabilityResult &r) {
  json j;
  j["exit_trace"] = to_string(r.exit_trace);
  j["almost_terminates"] = r.almost_terminates;
  j["expected_steps"] = double_or_null(r.expected_steps);
  j["guard_count"] = double_or_null(r.guard_count);
  j["exact"] = r.exact;
  j["kraus_rank"] = r.kraus_rank;
  j["power_residual"] = r.power_residual;
  j["stable_radius"] = r.stable_radius;
  j["output"] = to_json(r.output);
  if (r.channel)
    j["channel"] = to_json(*r.channel);
  return j;
}

json read_json_file(const std::string &path) {
  std::string text = read_text_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error &e) {
    throw ParseError(path + ": " + e.what());
  }
}

std::string read_text_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw ParseError("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text_file(const std::string &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw ParseError("cannot write '" + path + "'");
  out << text;
}

} // namespace qtl::io
