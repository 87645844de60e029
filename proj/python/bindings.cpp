// SPDX-License-Identifier: Apache-2.0
//
// Thin bindings: documents cross the boundary as JSON text and are decoded
// by the Python package.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "qtl/cli.hpp"
#include "qtl/io.hpp"
#include "qtl/qwhile.hpp"

namespace py = pybind11;
using namespace qtl;

namespace {

cli::AnyProgram program_from_text(const std::string &text) {
  auto j = io::json::parse(text);
  return io::program_from_json(j);
}

std::string compile_source(const std::string &source, bool normal_form) {
  CompiledProgram c = compile(parse_qwhile(source));
  if (normal_form)
    return io::to_json(bohm_jacopini(c.program)).dump();
  return io::to_json(c.program).dump();
}

std::string check(const std::string &program, const std::string &atoms,
                  const std::string &formula, double tolerance,
                  std::size_t period_bound, std::size_t depth) {
  cli::AnyProgram p = program_from_text(program);
  FlatModel m = cli::flat_model(p);
  AtomTable table = atoms.empty() ? AtomTable{}
                                  : io::atoms_from_json(io::json::parse(atoms), m);
  CheckOptions opt;
  opt.tolerance = tolerance;
  opt.period_bound = period_bound;
  FormulaPtr f = parse_formula(formula, table);
  cli::Dispatch d = cli::check_formula(p, *f, table, opt, depth);
  io::json j = io::to_json(d.verdict);
  j["procedure"] = d.procedure;
  return j.dump();
}

std::string reach(const std::string &program, double tolerance) {
  cli::AnyProgram p = program_from_text(program);
  const auto *seq = std::get_if<SequentialProgram>(&p);
  if (!seq)
    throw NotDeterministic("reachability needs a sequential program");
  CheckOptions opt;
  opt.tolerance = tolerance;
  return io::to_json(reachability_superop(*seq, opt)).dump();
}

std::string simulate(const std::string &program, std::size_t steps) {
  cli::AnyProgram p = program_from_text(program);
  FlatModel m = cli::flat_model(p);
  std::vector<Selector> sel = enumerate_selectors(m);
  CQState s = initial_cqstate(m);
  io::json out = io::json::array();
  for (std::size_t k = 0; k <= steps; ++k) {
    out.push_back(io::to_json(s, m));
    if (k < steps)
      s = step(m, s, sel.at(0));
  }
  return out.dump();
}

} // namespace

PYBIND11_MODULE(_qtl, m) {
  m.doc() = "Exact model checking of quantum programs";

  py::register_exception<Error>(m, "QtlError");
  py::register_exception<io::json::exception>(m, "JsonError", PyExc_ValueError);

  m.def("compile_source", &compile_source, py::arg("source"),
        py::arg("normal_form") = false);
  m.def("check", &check, py::arg("program"), py::arg("atoms"), py::arg("formula"),
        py::arg("tolerance") = 1e-9, py::arg("period_bound") = 64,
        py::arg("depth") = 12);
  m.def("reach", &reach, py::arg("program"), py::arg("tolerance") = 1e-9);
  m.def("simulate", &simulate, py::arg("program"), py::arg("steps"));
}
