// SPDX-License-Identifier: Apache-2.0
//
// JSON encodings. Numbers are exact: a real entry is a rational string
// ("3/4", "-1") or an integer, a complex entry is [re, im]. Matrices are
// arrays of rows. Kraus lists hold plain matrices or {"weight", "matrix"},
// a weighted entry standing for sqrt(weight) * matrix.
#pragma once

#include "json.hpp"
#include <string>
#include <variant>

#include "qtl/checker.hpp"
#include "qtl/qwhile.hpp"

namespace qtl::io {

using json = nlohmann::ordered_json;

json to_json(const CRat &z);
CRat crat_from_json(const json &j);

json to_json(const Mat &m);
Mat mat_from_json(const json &j);

json kraus_to_json(const std::vector<KrausOp> &ops);
std::vector<KrausOp> kraus_from_json(const json &j);

json to_json(const SuperOp &e);       // {"kraus": [...]}
SuperOp superop_from_json(const json &j, std::size_t dim);

// {"dim", "basis": [vector, ...]}; "full" and "zero" are accepted on input.
json to_json(const Subspace &s);
Subspace subspace_from_json(const json &j, std::size_t dim);
json to_json(const SubspaceUnion &u);

json to_json(const SequentialProgram &p);
json to_json(const ConcurrentProgram &p);
// Concurrent when the document has a "processes" key. Scheduler indices are
// 1-based in JSON.
std::variant<SequentialProgram, ConcurrentProgram> program_from_json(const json &j);

json to_json(const CQState &s, const FlatModel &m);
json to_json(const WhileNormalForm &nf);

// Atom files hold one {"name", "blocks"} object, an array of them, or
// {"atoms": [...]}. Blocks map configuration labels to subspaces of H.
AtomTable atoms_from_json(const json &j, const FlatModel &model);

json to_json(const Witness &w);
json to_json(const Verdict &v);
json to_json(const ReachabilityResult &r);

json read_json_file(const std::string &path);
std::string read_text_file(const std::string &path);
void write_text_file(const std::string &path, const std::string &text);

} // namespace qtl::io
