#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "stann/model.hpp"
#include "stann/montage.hpp"
#include "stann/nn/optimizer.hpp"
#include "stann/signal.hpp"
#include "stann/train.hpp"

namespace stann {

// ---------- dataset container ----------
//
// A dataset directory holds manifest.json, montage.csv and one binary file
// per trial under payloads/. Payload layout: row-major channels x time as
// little-endian 32-bit floats, the pretrial columns first, so each file is
// exactly n*(T0+T)*4 bytes.

void write_dataset(const Dataset& dataset, const std::filesystem::path& dir);
Dataset read_dataset(const std::filesystem::path& dir);

// ---------- checkpoints ----------
//
// Versioned text manifest (config, block list with parameter shapes,
// trainability flags, dropout rng state, optional optimizer metadata)
// followed by little-endian 32-bit float payloads per block, then optimizer
// moments. Write/read/write is byte-identical.

void write_checkpoint(const StannModel& model, const AdamState* optimizer,
                      const std::filesystem::path& path);
StannModel read_checkpoint(const std::filesystem::path& path, AdamState* optimizer = nullptr);
// Loads weights into an existing model; block/shape mismatches raise a
// DataError listing every affected block.
void read_checkpoint_into(StannModel& model, AdamState* optimizer,
                          const std::filesystem::path& path);
std::string checkpoint_summary(const std::filesystem::path& path);

// ---------- figure data ----------

// Scalp map: sensors projected azimuthally onto a disc, one filled circle
// per sensor colored by the min-max normalized value.
std::string render_topomap_svg(const Montage& montage, const Eigen::VectorXd& values);
void emit_topomap(const Montage& montage, const Eigen::VectorXd& values,
                  const std::filesystem::path& path);

// Mean spatial response of one final-stage filter over the given windows,
// expanded from pooled rows back to sensors and min-max normalized.
Eigen::VectorXd extract_kernel_map(StannModel& model,
                                   const std::vector<LabeledWindow>& windows, int column,
                                   int kernel);

// CSV of fusion-layer activations: label,e0,...,e{d-1} per window.
void export_embeddings(StannModel& model, const std::vector<LabeledWindow>& windows,
                       const std::filesystem::path& path);

// ---------- results ----------

void write_fold_csv(const FitResult& result, const std::filesystem::path& path);
// Summary statistics plus the full run configuration for provenance.
void write_summary_json(const FitResult& result, const std::string& provenance_json,
                        const std::filesystem::path& path);

struct TlReportRow {
  std::string scheme;
  std::string budget;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  double f1 = 0.0;
};
void write_tl_csv(const std::vector<TlReportRow>& rows, const std::filesystem::path& path);

}  // namespace stann
