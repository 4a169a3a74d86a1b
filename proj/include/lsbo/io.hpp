#pragma once

#include <cstdint>
#include <string>

#include "lsbo/bo.hpp"
#include "lsbo/vae.hpp"

namespace lsbo {

// Canonical JSON for a space; parses back to an equal space.
std::string space_to_json(const DesignSpace& space);

// Binary model checkpoint (versioned, self-describing; raw little-endian
// doubles so save/load round-trips bit-exactly).
std::string serialize_vae(const VaeModel& model);
VaeModel deserialize_vae(const std::string& bytes);
void save_vae(const VaeModel& model, const std::string& path);
VaeModel load_vae(const std::string& path);

// Binary campaign state. model_fnv ties a state to the checkpoint it was
// produced with.
std::string serialize_state(const CampaignState& st, std::uint64_t model_fnv);
CampaignState deserialize_state(const std::string& bytes,
                                std::uint64_t* model_fnv_out);

std::string history_csv(const DesignSpace& space, const CampaignState& st);
std::string front_csv(const DesignSpace& space, const CampaignState& st);
std::string training_csv(const TrainingReport& report);
std::string sweep_csv(std::span<const SweepRow> rows);
std::string latent_csv(const VaeModel& model);  // whole-space embedding table

std::string read_file(const std::string& path);   // throws when unreadable
void write_file(const std::string& path, const std::string& bytes);

// Campaign directory: model.bin, state.bin, history.csv, front.csv and a
// manifest.json fingerprinting all four (FNV-1a64). The manifest is written
// last; loading verifies every fingerprint and that the CSVs regenerate from
// the state, so an edited or half-written directory is refused.
void write_campaign_dir(const std::string& dir, const VaeModel& vae,
                        const CampaignState& st);

struct LoadedCampaign {
  VaeModel vae;
  CampaignState state;
};
LoadedCampaign load_campaign_dir(const std::string& dir);

}  // namespace lsbo
