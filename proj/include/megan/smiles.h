//
// Project megan - Copyright 2026 The megan authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MEGAN_SMILES_H_
#define MEGAN_SMILES_H_

#include <string>
#include <string_view>
#include <vector>

#include "megan/molgraph.h"

namespace megan {

// Parses a (possibly multi-component, atom-mapped) SMILES string.
//
// Aromatic flags are taken from the input: lowercase atoms are aromatic, and an
// unmarked bond between two aromatic atoms is aromatic when it lies on a ring.
// Explicit [H] atoms are folded into their neighbor's hydrogen count.
//
// Throws SyntaxError, ValenceError or UnsupportedFeatureError. Isotopes are
// ignored; a note is appended to `warnings` when it is non-null.
MolGraph parse_smiles(std::string_view text,
                      std::vector<std::string> *warnings = nullptr);

// Writes g (which must not contain a supernode) as SMILES. With canonical set
// the output depends only on the labeled graph, with map numbers ignored
// unless keep_maps is set. Throws ValenceError on chemically invalid graphs.
std::string write_smiles(const MolGraph &g, bool canonical = true,
                         bool keep_maps = true);

// Position of every atom in the canonical output of write_smiles(g, true,
// keep_maps). g must not contain a supernode.
std::vector<int> canonical_ranks(const MolGraph &g, bool keep_maps = false);

// Map-stripped canonical SMILES after aromaticity perception. This is the
// comparison key used for evaluation and reconstruction checks.
std::string canonical_key(const MolGraph &g);
std::string canonical_key(std::string_view smiles);

}  // namespace megan

#endif  // MEGAN_SMILES_H_
