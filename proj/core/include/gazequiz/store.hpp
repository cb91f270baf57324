#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gazequiz/board.hpp"
#include "gazequiz/capture.hpp"
#include "gazequiz/events.hpp"
#include "gazequiz/normalization.hpp"

namespace gazequiz {

inline constexpr int kStoreSchemaVersion = 1;
inline constexpr int kManifestSchemaVersion = 1;

struct Participant {
  std::string participant_id;  // opaque token, never a name
  bool wearing_eyetracker = false;
  bool exclude_from_dataset = false;

  friend bool operator==(const Participant&, const Participant&) = default;
};

struct SessionInfo {
  std::string session_id;
  std::string mode;
  std::vector<std::string> participants;
  std::string status = "open";  // open | completed | abandoned | imported
};

/// Sample record with the documented field order.
nlohmann::ordered_json sample_to_json(const GazeSample& s);
GazeSample sample_from_json(const nlohmann::json& j);

/// Directory-backed, append-only store:
///   store.json, participants.jsonl, index.jsonl, board_layout.txt,
///   sessions/<id>/{events.jsonl, samples.jsonl, images/}
/// Reopening after an interrupted write drops the unterminated last line of
/// each log. All methods are safe to call from several threads.
class SessionStore {
 public:
  /// Creates the layout or opens an existing store with the same board.
  /// Throws StorageError when the directory holds a store for another board.
  static SessionStore create(const std::filesystem::path& root, const BoardLayout& layout,
                             const NormalizationParams& normalization = {});
  static SessionStore open(const std::filesystem::path& root);

  SessionStore(SessionStore&&) noexcept;
  SessionStore& operator=(SessionStore&&) noexcept;
  ~SessionStore();

  const std::filesystem::path& root() const;
  const BoardLayout& layout() const;
  const NormalizationParams& normalization() const;

  /// Issues a fresh opaque participant token.
  Participant register_participant(bool wearing_eyetracker, bool exclude_from_dataset = false);
  /// Idempotent for an identical record; a conflicting one is a ValidationError.
  void add_participant(const Participant& p);
  std::optional<Participant> participant(const std::string& id) const;
  std::vector<Participant> participants() const;

  void open_session(const SessionInfo& info);
  void set_session_status(const std::string& session_id, const std::string& status);
  std::vector<SessionInfo> sessions() const;
  std::optional<SessionInfo> session(const std::string& session_id) const;

  void append_event(const std::string& session_id, const SessionEvent& event);
  std::vector<SessionEvent> events(const std::string& session_id) const;

  /// Writes sessions/<id>/images/<name>.pgm and returns its store-relative ref.
  std::string write_image(const std::string& session_id, const std::string& name, const GrayImage& image);

  /// Returns false (and writes nothing) for a sample_id already stored.
  /// Throws ValidationError for schema problems or unresolved image refs,
  /// StorageError when the write fails.
  bool append_sample(const GazeSample& sample);
  std::vector<GazeSample> samples() const;
  std::size_t sample_count() const;

  std::filesystem::path resolve(const std::string& ref) const { return root() / ref; }

 private:
  struct State;
  explicit SessionStore(std::unique_ptr<State> state);
  std::unique_ptr<State> state_;
};

enum class ExportFilter { training, eyetracker, all };
std::string_view to_string(ExportFilter f);
ExportFilter export_filter_from_string(std::string_view s);

/// Participants flagged exclude_from_dataset never pass. Beyond that,
/// training drops eye-tracker wearers, eyetracker keeps only them and all
/// keeps everything.
bool passes_filter(const GazeSample& s, const Participant& p, ExportFilter f);

struct ExportOptions {
  ExportFilter filter = ExportFilter::training;
  std::string dataset_id = "gazequiz";
  std::string created_at;  // ISO 8601; empty means now
};

struct ExportResult {
  std::filesystem::path manifest_path;
  std::size_t records = 0;
  nlohmann::ordered_json manifest;
};

/// Writes manifest.json, board_layout.txt and images/ under out_dir.
/// Throws EmptyExport when no sample passes the filter.
ExportResult export_dataset(const SessionStore& store, const std::filesystem::path& out_dir,
                            const ExportOptions& options = {});

/// Rebuilds a store from an exported dataset.
SessionStore import_dataset(const std::filesystem::path& export_dir, const std::filesystem::path& store_root);

struct FoldSplit {
  int k = 3;
  std::map<std::string, int> assignment;  // participant -> fold
  /// Per fold: sample ids drawn for fine-tuning from the other folds.
  std::vector<std::vector<std::string>> fine_tune_samples;

  std::vector<int> fold_sizes() const;
  std::vector<int> eyetracker_counts(const std::vector<Participant>& participants) const;
};

/// Deals eye-tracker wearers round-robin after a seeded shuffle, then fills
/// the remaining participants into the smallest folds. For each fold draws
/// up to `draw_size` samples from `pool` belonging to the other folds.
/// Throws InsufficientParticipants when k exceeds the participant count.
FoldSplit make_fold_split(const std::vector<Participant>& participants, int k, std::uint64_t seed,
                          const std::vector<GazeSample>& pool = {}, std::size_t draw_size = 15);

nlohmann::ordered_json fold_split_to_json(const FoldSplit& split);

}  // namespace gazequiz
