#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stutterkit/csv.hpp"
#include "stutterkit/labels.hpp"
#include "stutterkit/wav.hpp"

namespace stutterkit {

enum class Source { sep28k, fluencybank };

std::string_view to_string(Source s) noexcept;
Source parse_source(std::string_view s);

/// One annotated clip from the input inventory.
struct ClipRecord {
  std::string clip_id;
  std::string episode_id;
  std::string speaker_id;
  double duration_s = 0.0;
  int n_speakers = 1;
  Source source = Source::sep28k;
  std::array<int, kNumClasses> votes{};    // indexed by Label
  std::map<std::string, int> other_votes;  // labels outside the six classes

  int votes_for(Label label) const { return votes[index_of(label)]; }
};

/// Columns of the inventory CSV, in order.
extern const std::array<std::string_view, 13> kInventoryColumns;

std::vector<ClipRecord> parse_inventory(const CsvTable& table);
std::vector<ClipRecord> read_inventory(const std::filesystem::path& path);
CsvTable to_inventory_table(const std::vector<ClipRecord>& records);

// ---- cleaning ---------------------------------------------------------------

enum class RarePolicy {
  drop_list,  // reject clips unanimously tagged with a named rare label
  frequency,  // reject clips unanimously tagged with any extra label under a share
};

struct CleanOptions {
  int annotators = 3;
  double min_duration_s = 3.0;
  int max_speakers = 1;
  RarePolicy rare_policy = RarePolicy::drop_list;
  std::vector<std::string> drop_list = default_drop_list();
  double rare_share = 0.01;

  static std::vector<std::string> default_drop_list();
};

/// Lower-cased alphanumerics only, so "Natural Pause" == "NaturalPause".
std::string normalize_label_name(std::string_view name);

namespace reject_reason {
inline constexpr std::string_view multiple_speakers = "multiple_speakers";
inline constexpr std::string_view too_short = "too_short";
inline constexpr std::string_view rare_label = "rare_label";
inline constexpr std::string_view no_unanimous_label = "no_unanimous_label";
inline constexpr std::string_view multi_label = "multi_label";
}  // namespace reject_reason

struct CleanReport {
  std::size_t input = 0;
  std::size_t kept = 0;
  std::map<std::string, std::size_t> rejected;  // reason -> count

  std::string to_json() const;
};

struct CleanResult {
  std::vector<ClipRecord> kept;
  CleanReport report;
};

/// The single class all annotators agreed on, if there is exactly one.
std::optional<Label> unanimous_label(const ClipRecord& record, int annotators = 3);

CleanResult clean(const std::vector<ClipRecord>& records, const CleanOptions& options = {});

// ---- pairing ----------------------------------------------------------------

inline constexpr std::size_t kPartSamples = 3 * kSampleRate;
inline constexpr std::size_t kPairSamples = 2 * kPartSamples;

/// "Left_Right_" as used to key combination counts.
std::string combination_key(Label left, Label right);

/// Whether two single-label clips may be concatenated in either order.
bool pairable(Label a, Label b) noexcept;

struct PairSpec {
  std::string left_clip_id;
  std::string right_clip_id;
  Label left_label = Label::no_stuttered_words;
  Label right_label = Label::no_stuttered_words;
  LabelVector labels;
  std::string combination_key;
  std::string speaker_id;
  std::string episode_id;
};

struct MultiStutterClip : PairSpec {
  std::vector<float> samples;
};

/// Every ordered pair of distinct clips from the same episode and speaker that
/// satisfies pairable(), ordered by (episode_id, left_clip_id, right_clip_id).
/// Records must be cleaned; a record without a unanimous label throws.
std::vector<PairSpec> plan_pairs(const std::vector<ClipRecord>& cleaned, int annotators = 3);

/// Each part fitted to part_samples (truncated or zero-padded) then joined.
/// Throws SampleRateMismatch unless both parts are at kSampleRate.
MultiStutterClip concatenate(const PairSpec& spec, const AudioClip& left, const AudioClip& right,
                             std::size_t part_samples = kPartSamples);

using AudioLoader = std::function<AudioClip(const std::string& clip_id)>;

/// Loader reading <dir>/<clip_id>.wav.
AudioLoader directory_loader(std::filesystem::path dir);

std::vector<MultiStutterClip> pair(const std::vector<ClipRecord>& cleaned, const AudioLoader& load);

// ---- balancing --------------------------------------------------------------

struct SpeakerStats {
  std::map<std::string, std::size_t> disfluent_groups;  // combination key -> pairs
  std::size_t no_stutter_pairs = 0;
  std::size_t target = 0;  // rounded mean of disfluent_groups, 0 if none
};

struct PairKey {
  std::string_view speaker_id;
  std::string_view combination_key;
};

std::map<std::string, SpeakerStats> speaker_stats(std::span<const PairKey> pairs);

/// keep[i] for each pair. Disfluent pairs are always kept; each speaker keeps a
/// uniformly sampled subset of its no-stutter pairs of size min(target, count).
std::vector<bool> balance_mask(std::span<const PairKey> pairs, std::uint64_t seed);

template <typename P>
std::vector<P> balance_no_stutter(std::vector<P> pairs, std::uint64_t seed) {
  std::vector<PairKey> keys;
  keys.reserve(pairs.size());
  for (const auto& p : pairs) keys.push_back({p.speaker_id, p.combination_key});
  const auto keep = balance_mask(keys, seed);
  std::vector<P> out;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (keep[i]) out.push_back(std::move(pairs[i]));
  }
  return out;
}

// ---- speaker groups and splits ----------------------------------------------

enum class SpeakerGroup { dominant4, ds_set1, ds_set2, fluencybank };

inline constexpr std::array<SpeakerGroup, 4> kAllGroups = {
    SpeakerGroup::dominant4, SpeakerGroup::ds_set1, SpeakerGroup::ds_set2, SpeakerGroup::fluencybank};

std::string_view to_string(SpeakerGroup g) noexcept;
SpeakerGroup parse_speaker_group(std::string_view s);

struct SpeakerAssignment {
  std::string speaker_id;
  SpeakerGroup group;
};

/// SEP-28k speakers ranked by clip count (ties by id): the top four form 4-DS,
/// the rest are dealt greedily to whichever of DS-Set 1/2 holds fewer clips.
/// FluencyBank speakers go to FB.
std::vector<SpeakerAssignment> assign_speaker_groups(const std::vector<ClipRecord>& records);

/// CSV with columns speaker_id,group.
std::vector<SpeakerAssignment> read_speaker_groups(const std::filesystem::path& path);

struct SplitPlan {
  std::string name;
  std::vector<SpeakerGroup> train;
  std::vector<SpeakerGroup> val;
  std::vector<SpeakerGroup> test;
};

const std::vector<SplitPlan>& split_plans();
/// Throws InvalidArgument for unknown names.
const SplitPlan& split_plan(std::string_view name);

enum class Partition { train, val, test };
std::string_view to_string(Partition p) noexcept;

struct Splits {
  SplitPlan plan;
  std::vector<std::size_t> train, val, test;  // indices into the input pairs
  std::map<std::string, SpeakerGroup> speaker_groups;

  const std::vector<std::size_t>& operator[](Partition p) const;
};

/// Throws SpeakerLeak if an assignment places one speaker in two groups or a
/// speaker ends up in two partitions; InvalidArgument for unassigned speakers.
Splits build_splits(std::span<const PairSpec> pairs, std::span<const SpeakerAssignment> groups,
                    const SplitPlan& plan);

/// Per-combination counts for each group and partition, with totals.
std::string count_report_json(std::span<const PairSpec> pairs, const Splits& splits);

// ---- split manifests --------------------------------------------------------

struct ManifestRow {
  std::string clip_path;
  LabelVector labels;
  std::string combination_key;
  std::string speaker_id;
};

extern const std::array<std::string_view, 9> kManifestColumns;

CsvTable to_manifest_table(const std::vector<ManifestRow>& rows);
std::vector<ManifestRow> parse_manifest(const CsvTable& table);
std::vector<ManifestRow> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestRow>& rows);

/// File name of a materialized pair.
std::string pair_file_name(const PairSpec& spec);

}  // namespace stutterkit
