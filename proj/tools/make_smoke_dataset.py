#!/usr/bin/env python3
#
# Project megan - Copyright 2026 The megan authors.
# SPDX-License-Identifier: Apache-2.0
#
"""Builds the small atom-mapped smoke corpus in data/smoke.

Reactions are produced by applying a handful of textbook templates to
building blocks with RDKit. Atoms of the product are mapped to their reactant
atoms; reactant atoms that do not reach the product stay unmapped, which is
how the public USPTO-50k files look. Output uses the USPTO-50k CSV layout.

Usage: make_smoke_dataset.py [OUTDIR]
"""

import csv
import os
import random
import sys

from rdkit import Chem, RDLogger
from rdkit.Chem import AllChem

RDLogger.DisableLog("rdApp.*")

ACIDS = [
    "CC(=O)O", "OC(=O)c1ccccc1", "OC(=O)c1ccc(Cl)cc1", "OC(=O)C1CCCCC1",
    "OC(=O)c1ccncc1", "OC(=O)Cc1ccccc1", "C/C=C/C(=O)O", "OC(=O)/C=C/c1ccccc1",
    "OC(=O)c1cccs1", "OC(=O)C1CC1", "C[C@H](N(C)C)C(=O)O", "OC(=O)c1ccc(F)cc1",
]
AMINES = [
    "NCc1ccccc1", "C1CCNCC1", "NC1CCCCC1", "CNC", "Nc1ccccc1", "C1COCCN1",
    "NCCO", "C[C@@H](N)c1ccccc1", "NCC(F)(F)F", "CN1CCNCC1", "Nc1ccc(Br)cc1",
    "NC(C)(C)C",
]
ALCOHOLS = ["CO", "CCO", "CC(C)O", "OCc1ccccc1", "OCCCl", "C[C@@H](O)CC"]
ALKYL_BROMIDES = [
    "BrCc1ccccc1", "CCBr", "BrCC(=O)OCC", "BrCCCCl", "BrCc1ccc(C#N)cc1",
    "BrCC=C", "BrCC1CC1",
]
PHENOLS = ["Oc1ccccc1", "Oc1ccc(Cl)cc1", "Oc1ccc(C=O)cc1", "COc1ccc(O)cc1",
           "Oc1cccc2ccccc12"]
ARYL_BROMIDES = ["Brc1ccccc1", "Brc1ccc(C)cc1", "Brc1cccnc1", "COc1ccc(Br)cc1",
                 "Brc1ccc(C(=O)OC)cc1", "Brc1cccs1"]
BORONIC = ["OB(O)c1ccccc1", "OB(O)c1ccc(F)cc1", "OB(O)c1ccncc1",
           "COc1ccc(B(O)O)cc1", "OB(O)c1ccco1"]
ALDEHYDES = ["O=Cc1ccccc1", "CC(C)C=O", "O=Cc1ccco1", "O=CC1CCCCC1",
             "O=Cc1ccc(OC)cc1"]
FLUOROARENES = ["O=[N+]([O-])c1ccc(F)cc1", "Fc1ccc(C#N)cc1[N+](=O)[O-]",
                "Fc1ncccc1"]
SULFONYL = ["Cc1ccc(S(=O)(=O)Cl)cc1", "CS(=O)(=O)Cl", "O=S(=O)(Cl)c1ccccc1"]
NITROARENES = ["O=[N+]([O-])c1ccccc1", "Cc1ccc([N+](=O)[O-])cc1",
               "O=[N+]([O-])c1ccc(Cl)cc1", "COc1ccc([N+](=O)[O-])cc1",
               "O=[N+]([O-])c1cccnc1", "O=[N+]([O-])c1ccc(C(=O)O)cc1",
               "Cc1cccc([N+](=O)[O-])c1", "O=[N+]([O-])c1ccc(F)cc1",
               "O=[N+]([O-])c1cccc(Br)c1", "N#Cc1ccc([N+](=O)[O-])cc1",
               "O=[N+]([O-])c1ccc2ccccc2c1"]

TEMPLATES = [
    # (class, smarts, reactant pools)
    (2, "[C:1](=[O:2])[OH].[N;H2,H1;!$(NC=O);!$(NS=O):3]>>[C:1](=[O:2])[N:3]",
     [ACIDS, AMINES]),
    (6, "[C:1](=[O:2])[OH].[OH;$(O[CX4]):3]>>[C:1](=[O:2])[O:3]",
     [ACIDS, ALCOHOLS]),
    (1, "[N;H2,H1;!$(NC=O);!$(Nc):1].[CH2:2]Br>>[N:1][CH2:2]",
     [AMINES, ALKYL_BROMIDES]),
    (3, "[c:1]Br.[c:2]B(O)O>>[c:1][c:2]", [ARYL_BROMIDES, BORONIC]),
    (1, "[CH1:1]=O.[N;H2,H1;!$(NC=O);!$(Nc):2]>>[CH2:1][N:2]",
     [ALDEHYDES, AMINES]),
    (1, "[c:1]F.[N;H2,H1;!$(NC=O);!$(Nc):2]>>[c:1][N:2]",
     [FLUOROARENES, AMINES]),
    (1, "[c:1][OH:2].[CH2:3]Br>>[c:1][O:2][CH2:3]", [PHENOLS, ALKYL_BROMIDES]),
    (2, "[S:1](=[O:2])(=[O:3])Cl.[N;H2,H1;!$(NC=O):4]>>[S:1](=[O:2])(=[O:3])[N:4]",
     [SULFONYL, AMINES]),
    (7, "[c:1][N+:2](=O)[O-]>>[c:1][N+0:2]", [NITROARENES]),
]

# Deprotections, applied to products of the coupling templates above so that
# the protecting group is a leaving group of the corresponding retro step.
DEPROTECT = [
    (6, "[N;!$(N-[#6]=O):1]C(=O)OC(C)(C)C>>[N:1]", "[N:1]>>[N:1]C(=O)OC(C)(C)C"),
    (6, "[C:1](=[O:2])[O:3]Cc1ccccc1>>[C:1](=[O:2])[O:3]",
     "[C:1](=[O:2])[OH1:3]>>[C:1](=[O:2])[O:3]Cc1ccccc1"),
    (6, "[N;!$(N-[#6]=O):1]C(=O)OCc1ccccc1>>[N:1]",
     "[N:1]>>[N:1]C(=O)OCc1ccccc1"),
    (6, "[C:1](=[O:2])[O:3][CH3]>>[C:1](=[O:2])[O:3]",
     "[C:1](=[O:2])[OH1:3]>>[C:1](=[O:2])[O:3]C"),
]
PROTECT_SUBSTRATES = [
    ["NCc1ccccc1", "C1CCNCC1", "NC1CCCCC1", "Nc1ccccc1", "C[C@@H](N)c1ccccc1",
     "NCCc1ccccc1", "N[C@@H](C)C(=O)OC", "C1CCNC1", "NCc1ccncc1"],
    ["OC(=O)c1ccccc1", "CC(=O)O", "OC(=O)C1CCCCC1", "OC(=O)CCc1ccccc1",
     "C/C=C/C(=O)O", "OC(=O)c1ccc(Cl)cc1", "OC(=O)CN1CCOCC1"],
    ["NCc1ccccc1", "C1CCNCC1", "NC1CCCCC1", "N[C@H](C)CO", "C1COCCN1",
     "NCCO", "Nc1ccc(F)cc1"],
    ["OC(=O)c1ccccc1", "OC(=O)c1ccc(F)cc1", "OC(=O)/C=C/c1ccccc1",
     "OC(=O)c1cccs1", "OC(=O)C1CC1", "OC(=O)c1ccncc1"],
]


def mapped_reaction(reactants, product, rng):
    """Returns 'reactants>>product' with provenance-derived atom maps."""
    Chem.SanitizeMol(product)
    order = list(range(product.GetNumAtoms()))
    maps = list(range(1, product.GetNumAtoms() + 1))
    rng.shuffle(maps)
    mols = [Chem.Mol(r) for r in reactants]
    for m in mols:
        for a in m.GetAtoms():
            a.SetAtomMapNum(0)
    for idx, mapno in zip(order, maps):
        a = product.GetAtomWithIdx(idx)
        if not a.HasProp("react_atom_idx"):
            return None
        ri = a.GetIntProp("react_idx")
        ai = a.GetIntProp("react_atom_idx")
        mols[ri].GetAtomWithIdx(ai).SetAtomMapNum(mapno)
        a.SetAtomMapNum(mapno)
    lhs = ".".join(Chem.MolToSmiles(m) for m in mols)
    rhs = Chem.MolToSmiles(product)
    # Reject anything that RDKit cannot read back.
    for s in lhs.split(".") + [rhs]:
        if Chem.MolFromSmiles(s) is None:
            return None
    return lhs + ">>" + rhs


def run_template(smarts, smiles_list, rng):
    rxn = AllChem.ReactionFromSmarts(smarts)
    mols = [Chem.MolFromSmiles(s) for s in smiles_list]
    outcomes = rxn.RunReactants(tuple(mols))
    seen = set()
    results = []
    for prods in outcomes:
        p = Chem.Mol(prods[0])
        try:
            Chem.SanitizeMol(p)
        except Exception:
            continue
        key = Chem.MolToSmiles(p)
        if key in seen:
            continue
        seen.add(key)
        r = mapped_reaction(mols, p, rng)
        if r is not None:
            results.append(r)
    return results


def protected(smiles, smarts):
    rxn = AllChem.ReactionFromSmarts(smarts)
    m = Chem.MolFromSmiles(smiles)
    outs = rxn.RunReactants((m,))
    for prods in outs:
        p = Chem.Mol(prods[0])
        try:
            Chem.SanitizeMol(p)
        except Exception:
            continue
        return Chem.MolToSmiles(p)
    return None


def build(rng):
    rows = []
    for cls, smarts, pools in TEMPLATES:
        combos = []
        if len(pools) == 1:
            combos = [[s] for s in pools[0]]
        else:
            combos = [[a, b] for a in pools[0] for b in pools[1]]
        rng.shuffle(combos)
        taken = 0
        for combo in combos:
            if taken >= 24:
                break
            out = run_template(smarts, combo, rng)
            if out:
                rows.append((cls, out[0]))
                taken += 1
    for (cls, smarts, protect), substrates in zip(DEPROTECT, PROTECT_SUBSTRATES):
        for s in substrates:
            ps = protected(s, protect)
            if ps is None:
                continue
            out = run_template(smarts, [ps], rng)
            if out:
                rows.append((cls, out[0]))
    return rows


def main():
    outdir = sys.argv[1] if len(sys.argv) > 1 else os.path.join(
        os.path.dirname(os.path.abspath(__file__)), "..", "data", "smoke")
    rng = random.Random(20260101)
    rows = build(rng)
    rng.shuffle(rows)
    rows = rows[:200]
    n = len(rows)
    n_val = n // 10
    n_test = n // 10
    splits = {
        "val": rows[:n_val],
        "test": rows[n_val:n_val + n_test],
        "train": rows[n_val + n_test:],
    }
    os.makedirs(outdir, exist_ok=True)
    counter = 0
    for name in ("train", "val", "test"):
        path = os.path.join(outdir, "raw_%s.csv" % name)
        with open(path, "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["id", "class", "reactants>reagents>production"])
            for cls, rxn in splits[name]:
                counter += 1
                lhs, rhs = rxn.split(">>")
                w.writerow(["SMOKE_%04d" % counter, cls, lhs + ">>" + rhs])
        print("%s: %d reactions" % (path, len(splits[name])))
    print("total: %d" % n)


if __name__ == "__main__":
    main()
