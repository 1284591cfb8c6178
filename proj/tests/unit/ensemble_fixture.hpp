#pragma once

#include "stens/engine.hpp"
#include "stens/synth.hpp"
#include "support.hpp"

namespace stens::testing {

/// Coarse phantom ensemble sim1..sim3 + exp1 written once per process.
inline const std::filesystem::path& small_ensemble_dir() {
    static TempDir dir;
    static const bool written = [] {
        synth::EnsembleSpec spec;
        spec.grid = coarse_grid();
        spec.patch.sub_size = {8, 8};
        spec.embedding_dimension = 8;
        spec.members = synth::default_members(3, 1);
        synth::generate_ensemble(spec, dir.path());
        return true;
    }();
    (void)written;
    return dir.path();
}

inline std::shared_ptr<const Ensemble> small_ensemble() {
    static const auto ensemble = Ensemble::load(Manifest::load(small_ensemble_dir()));
    return ensemble;
}

} // namespace stens::testing
