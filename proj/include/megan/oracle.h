//
// Project megan - Copyright 2026 The megan authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MEGAN_ORACLE_H_
#define MEGAN_ORACLE_H_

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "megan/editops.h"
#include "megan/molgraph.h"

namespace megan {

enum class Direction : std::uint8_t { Retro, Forward };

std::string_view to_string(Direction d);
// "retro" or "forward"; throws ConfigError otherwise.
Direction parse_direction(std::string_view s);

// A mapped reaction, prepared for one direction. Hydrogens are normalized and
// map numbers are cleaned up (see parse_reaction).
struct Reaction {
  std::string id;
  MolGraph substrates;
  MolGraph product;
  std::optional<int> reaction_class;
  Direction direction = Direction::Retro;

  const MolGraph &source() const {
    return direction == Direction::Retro ? product : substrates;
  }
  const MolGraph &target() const {
    return direction == Direction::Retro ? substrates : product;
  }
};

struct ReactionPrepStats {
  int dropped_molecules = 0;
  int cleared_maps = 0;
};

// Parses "reactants>reagents>product". Retro ignores reagents. Forward adds
// them to the source and flags reactant atoms with in_reactant. Map numbers
// that appear only on one side are cleared; retro targets lose molecules with
// no mapped atom. Throws SyntaxError, ValenceError, UnsupportedFeatureError,
// MappingError.
Reaction parse_reaction(std::string_view rxn, Direction direction,
                        std::optional<int> reaction_class = std::nullopt,
                        ReactionPrepStats *stats = nullptr);

enum class OrderingStrategy : std::uint8_t {
  BfsRandAt,
  DfsRandAt,
  BfsCanoAt,
  DfsCanoAt,
  Random,
};

// bfs-rand, dfs-rand, bfs-cano, dfs-cano, random.
std::string_view to_string(OrderingStrategy s);
OrderingStrategy parse_ordering(std::string_view s);
inline constexpr OrderingStrategy kAllOrderings[] = {
  OrderingStrategy::BfsRandAt, OrderingStrategy::DfsRandAt,
  OrderingStrategy::BfsCanoAt, OrderingStrategy::DfsCanoAt,
  OrderingStrategy::Random,
};

struct OrderingPolicy {
  OrderingStrategy strategy = OrderingStrategy::BfsRandAt;
  std::uint64_t rng_seed = 0;
};

// Action type priority (1 is highest).
enum class EditCategory : std::uint8_t {
  DeleteBond,
  AddBond,
  OtherBond,
  EditAtom,
  AddBenzene,
  AddAtom,
};
int priority(EditCategory c, Direction d);

// Edits still needed to turn the current state into the target. Indices refer
// to the current state graph.
struct PendingEditSet {
  struct Addition {
    int anchor = -1;
    // Target atom that the new atom stands for; for AddBenzene, the ring in
    // the order its atoms will be created.
    std::vector<int> target_atoms;
    EditAction action;
  };

  std::map<int, EditAction> atom_edits;
  std::map<BondKey, EditAction> bond_edits;
  // Addable now: target-only atoms adjacent to an atom already present.
  std::vector<Addition> atom_additions;
  // Target-only atoms not yet present (reachable later through additions).
  int missing_atoms = 0;

  bool empty() const {
    return atom_edits.empty() && bond_edits.empty() && atom_additions.empty();
  }
  int size() const {
    return static_cast<int>(atom_edits.size() + bond_edits.size()
                            + atom_additions.size());
  }
};

struct OracleStats {
  // Benzene rings added atom by atom because the anchor was not a carbon or
  // not singly bonded.
  int benzene_fallbacks = 0;
};

// A partial graph together with its correspondence to the target.
class OracleState {
public:
  // Throws UnreachableAtomsError if a target-only atom is not connected to
  // any mapped atom, MappingError on inconsistent maps.
  explicit OracleState(const Reaction &r);

  const MolGraph &graph() const { return graph_; }
  const MolGraph &target() const { return target_; }
  Direction direction() const { return direction_; }

  // Target atom of a state atom, or -1.
  int target_of(int atom) const { return target_of_[atom]; }
  // State atom of a target atom, or -1 when not yet added.
  int state_of(int target_atom) const { return state_of_[target_atom]; }
  // Canonical rank used by CanoAT ordering (target canonical SMILES order;
  // source-only atoms come after all target atoms).
  int canonical_rank(int atom) const;
  int target_canonical_rank(int target_atom) const {
    return target_ranks_[target_atom];
  }

  PendingEditSet pending() const;

  // Applies an addition or edit taken from pending().
  void apply(const EditAction &a, const ActionTarget &t,
             const std::vector<int> &added_target_atoms = {});

  // Final index guesses for atoms that are not present yet; used to express
  // stereo labels in the index frame of the finished graph.
  void set_final_index_guess(std::vector<int> guess) {
    guess_ = std::move(guess);
  }
  std::vector<int> final_indices() const;
  bool target_has_stereo() const { return target_has_stereo_; }
  // True if target atom t lies on an eligible benzene ring whose atoms are
  // all still missing.
  bool in_missing_benzene(int target_atom) const;

  // Map-stripped canonical key of the target-side molecules in the current
  // state (retro: whole graph; forward: atoms that stand for target atoms).
  std::string reconstruction_key() const;
  const std::string &target_key() const { return target_key_; }

private:
  int final_index(int target_atom) const;
  ChiralTag desired_chiral(int target_atom) const;
  BondStereo desired_stereo(int ta, int tb) const;
  EditAction desired_atom_action(int target_atom) const;

  Direction direction_;
  MolGraph graph_;
  MolGraph target_;
  std::vector<int> target_of_;
  std::vector<int> state_of_;
  std::vector<int> target_ranks_;
  std::vector<int> guess_;
  // Target-only benzene rings eligible for AddBenzene (each of 6 atoms).
  std::vector<std::vector<int>> benzene_rings_;
  std::vector<std::vector<int>> rings_of_atom_;
  bool target_has_stereo_ = false;
  std::string target_key_;
};

PendingEditSet diff_reaction(const Reaction &r);

// One pending action with the bookkeeping used by the ordering rules.
struct Candidate {
  int atom = -1;  // the atom this entry is listed under
  EditCategory category = EditCategory::EditAtom;
  EditAction action;
  ActionTarget target;
  // Partner atom (state index) for bond edits, or target atom for additions.
  int partner = -1;
  std::vector<int> added_target_atoms;
};

// Every (atom, action) pair: bond edits appear under both endpoints.
std::vector<Candidate> candidate_actions(const OracleState &s);

struct Choice {
  EditAction action;
  ActionTarget target;
  std::vector<int> added_target_atoms;
};

// One step of the ordering algorithm. `order` ranks target atoms for partner
// selection (canonical ranks for CanoAT, a seeded permutation otherwise).
Choice next_action(const OracleState &s, const OrderingPolicy &policy,
                   const std::vector<int> &order, std::mt19937_64 &rng,
                   OracleStats *stats = nullptr);

struct Step {
  EditAction action;
  ActionTarget target;

  bool operator==(const Step &) const = default;
};

struct TrainingSample {
  std::string id;
  std::optional<int> reaction_class;
  Direction direction = Direction::Retro;
  // Source graph without supernode, edit flags cleared.
  MolGraph source;
  // Ends with Stop. Targets refer to the state graph (with supernode).
  std::vector<Step> steps;
  std::string source_key;
  std::string target_key;
};

// Throws SequenceTooLongError when more than max_steps actions (Stop
// included) are needed, ReconstructionError when the replay does not match
// the target ("reconstruction") or stereo labels cannot be settled
// ("stereo-order"). Errors from OracleState propagate.
TrainingSample generate_sequence(const Reaction &r,
                                 const OrderingPolicy &policy, int max_steps,
                                 OracleStats *stats = nullptr);

// Graph states before each step (with supernode); states[k] is the input of
// steps[k]. The last element is the graph after the final step.
std::vector<MolGraph> replay_states(const TrainingSample &s);
// Map-stripped canonical key of the replayed result, target side only. For
// forward samples the product is made of the mapped source atoms plus every
// atom added during the replay.
std::string replay_key(const TrainingSample &s);

ActionVocab build_vocab(const std::vector<TrainingSample> &samples);

}  // namespace megan

#endif  // MEGAN_ORACLE_H_
