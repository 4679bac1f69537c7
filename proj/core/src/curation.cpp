#include "stutterkit/curation.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numeric>
#include <set>
#include <tuple>

#include <json.hpp>

#include "stutterkit/error.hpp"
#include "stutterkit/random.hpp"

namespace stutterkit {

using nlohmann::ordered_json;

namespace {

template <typename T>
T parse_field(const std::string& text, std::string_view column, std::size_t row) {
  T out{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, out);
  if (ec != std::errc{} || ptr != end) {
    throw Error(Errc::corrupt_file, "row " + std::to_string(row + 2) + ", column " + std::string(column) +
                                        ": cannot parse '" + text + "'");
  }
  return out;
}

std::string format_number(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

std::string_view to_string(Source s) noexcept {
  return s == Source::sep28k ? "SEP28k" : "FluencyBank";
}

Source parse_source(std::string_view s) {
  const auto n = normalize_label_name(s);
  if (n == "sep28k") return Source::sep28k;
  if (n == "fluencybank" || n == "fb") return Source::fluencybank;
  throw Error(Errc::invalid_argument, "unknown source '" + std::string(s) + "'");
}

const std::array<std::string_view, 13> kInventoryColumns = {
    "clip_id",        "episode_id",         "speaker_id",         "duration_s",
    "n_speakers",     "source",             "votes_Block",        "votes_Interjection",
    "votes_Prolongation", "votes_SoundRep", "votes_WordRep",      "votes_NoStutteredWords",
    "votes_other_json"};

std::vector<ClipRecord> parse_inventory(const CsvTable& table) {
  std::array<std::size_t, kInventoryColumns.size()> col{};
  for (std::size_t i = 0; i < col.size(); ++i) col[i] = table.column(kInventoryColumns[i]);

  std::vector<ClipRecord> out;
  out.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    ClipRecord rec;
    rec.clip_id = row[col[0]];
    rec.episode_id = row[col[1]];
    rec.speaker_id = row[col[2]];
    rec.duration_s = parse_field<double>(row[col[3]], kInventoryColumns[3], r);
    rec.n_speakers = parse_field<int>(row[col[4]], kInventoryColumns[4], r);
    rec.source = parse_source(row[col[5]]);
    for (std::size_t k = 0; k < kNumClasses; ++k) {
      rec.votes[k] = parse_field<int>(row[col[6 + k]], kInventoryColumns[6 + k], r);
    }
    if (const auto& other = row[col[12]]; !other.empty()) {
      try {
        const auto parsed = nlohmann::json::parse(other);
        if (!parsed.is_object()) {
          throw Error(Errc::corrupt_file, "row " + std::to_string(r + 2) + ": votes_other_json must be an object");
        }
        for (const auto& [name, count] : parsed.items()) rec.other_votes[name] = count.get<int>();
      } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::corrupt_file, "row " + std::to_string(r + 2) + ", votes_other_json: " + e.what());
      }
    }
    if (rec.clip_id.empty()) throw Error(Errc::corrupt_file, "row " + std::to_string(r + 2) + ": empty clip_id");
    if (!(rec.duration_s > 0.0)) {
      throw Error(Errc::corrupt_file, "clip " + rec.clip_id + ": duration_s must be positive");
    }
    const auto bad_vote = [](int v) { return v < 0 || v > 3; };
    if (std::any_of(rec.votes.begin(), rec.votes.end(), bad_vote) ||
        std::any_of(rec.other_votes.begin(), rec.other_votes.end(),
                    [&](const auto& kv) { return bad_vote(kv.second); })) {
      throw Error(Errc::corrupt_file, "clip " + rec.clip_id + ": votes must lie in [0, 3]");
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<ClipRecord> read_inventory(const std::filesystem::path& path) {
  try {
    return parse_inventory(read_csv(path));
  } catch (const Error& e) {
    if (e.code() == Errc::io_error) throw;
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

CsvTable to_inventory_table(const std::vector<ClipRecord>& records) {
  CsvTable t;
  t.header.assign(kInventoryColumns.begin(), kInventoryColumns.end());
  for (const auto& r : records) {
    std::vector<std::string> row = {r.clip_id, r.episode_id, r.speaker_id, format_number(r.duration_s),
                                    std::to_string(r.n_speakers), std::string(to_string(r.source))};
    for (int v : r.votes) row.push_back(std::to_string(v));
    nlohmann::json other = nlohmann::json::object();
    for (const auto& [name, count] : r.other_votes) other[name] = count;
    row.push_back(r.other_votes.empty() ? std::string() : other.dump());
    t.rows.push_back(std::move(row));
  }
  return t;
}

// ---- cleaning ---------------------------------------------------------------

std::vector<std::string> CleanOptions::default_drop_list() {
  return {"NaturalPause",     "HardToUnderstand", "DifficultToUnderstand", "Speechless",
          "NoSpeech",         "BadAudioQuality",  "PoorAudioQuality",      "Music"};
}

std::string normalize_label_name(std::string_view name) {
  std::string out;
  for (unsigned char c : name) {
    if (std::isalnum(c)) out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

std::string CleanReport::to_json() const {
  ordered_json j;
  j["input"] = input;
  j["kept"] = kept;
  j["rejected"] = ordered_json::object();
  for (const auto& [reason, n] : rejected) j["rejected"][reason] = n;
  return j.dump(2);
}

std::optional<Label> unanimous_label(const ClipRecord& record, int annotators) {
  std::optional<Label> found;
  for (Label l : kAllLabels) {
    if (record.votes_for(l) >= annotators) {
      if (found) return std::nullopt;
      found = l;
    }
  }
  return found;
}

CleanResult clean(const std::vector<ClipRecord>& records, const CleanOptions& options) {
  std::set<std::string> rare;
  if (options.rare_policy == RarePolicy::drop_list) {
    for (const auto& name : options.drop_list) rare.insert(normalize_label_name(name));
  } else if (!records.empty()) {
    std::map<std::string, std::size_t> unanimous;
    for (const auto& r : records) {
      for (const auto& [name, v] : r.other_votes) {
        auto& n = unanimous[normalize_label_name(name)];
        if (v >= options.annotators) ++n;
      }
    }
    for (const auto& [name, n] : unanimous) {
      if (static_cast<double>(n) / static_cast<double>(records.size()) < options.rare_share) rare.insert(name);
    }
  }

  CleanResult result;
  result.report.input = records.size();
  const auto reject = [&](std::string_view reason) { ++result.report.rejected[std::string(reason)]; };

  for (const auto& r : records) {
    if (r.n_speakers > options.max_speakers) {
      reject(reject_reason::multiple_speakers);
      continue;
    }
    if (r.duration_s < options.min_duration_s) {
      reject(reject_reason::too_short);
      continue;
    }
    const bool rare_hit = std::any_of(r.other_votes.begin(), r.other_votes.end(), [&](const auto& kv) {
      return kv.second >= options.annotators && rare.count(normalize_label_name(kv.first)) != 0;
    });
    if (rare_hit) {
      reject(reject_reason::rare_label);
      continue;
    }
    int unanimous = 0;
    for (Label l : kAllLabels) unanimous += r.votes_for(l) >= options.annotators ? 1 : 0;
    if (unanimous == 0) {
      reject(reject_reason::no_unanimous_label);
      continue;
    }
    if (unanimous > 1) {
      reject(reject_reason::multi_label);
      continue;
    }
    result.kept.push_back(r);
  }
  result.report.kept = result.kept.size();
  return result;
}

// ---- pairing ----------------------------------------------------------------

std::string combination_key(Label left, Label right) {
  std::string key(label_name(left));
  key += '_';
  key += label_name(right);
  key += '_';
  return key;
}

bool pairable(Label a, Label b) noexcept {
  if (a == Label::no_stuttered_words || b == Label::no_stuttered_words) return a == b;
  return a != b;
}

std::vector<PairSpec> plan_pairs(const std::vector<ClipRecord>& cleaned, int annotators) {
  struct Item {
    const ClipRecord* rec;
    Label label;
  };
  std::map<std::pair<std::string, std::string>, std::vector<Item>> buckets;  // (episode, speaker)
  for (const auto& r : cleaned) {
    const auto label = unanimous_label(r, annotators);
    if (!label) {
      throw Error(Errc::invalid_argument, "clip " + r.clip_id + " has no single unanimous label; clean first");
    }
    buckets[{r.episode_id, r.speaker_id}].push_back({&r, *label});
  }

  std::vector<PairSpec> out;
  for (const auto& [key, items] : buckets) {
    for (const auto& a : items) {
      for (const auto& b : items) {
        if (a.rec->clip_id == b.rec->clip_id || !pairable(a.label, b.label)) continue;
        PairSpec p;
        p.left_clip_id = a.rec->clip_id;
        p.right_clip_id = b.rec->clip_id;
        p.left_label = a.label;
        p.right_label = b.label;
        p.labels = LabelVector::single(a.label) | LabelVector::single(b.label);
        p.combination_key = combination_key(a.label, b.label);
        p.speaker_id = key.second;
        p.episode_id = key.first;
        out.push_back(std::move(p));
      }
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const PairSpec& x, const PairSpec& y) {
    return std::tie(x.episode_id, x.left_clip_id, x.right_clip_id) <
           std::tie(y.episode_id, y.left_clip_id, y.right_clip_id);
  });
  return out;
}

MultiStutterClip concatenate(const PairSpec& spec, const AudioClip& left, const AudioClip& right,
                             std::size_t part_samples) {
  for (const AudioClip* part : {&left, &right}) {
    if (part->sample_rate != kSampleRate) {
      throw Error(Errc::sample_rate_mismatch, "clip " + part->clip_id + " is " +
                                                  std::to_string(part->sample_rate) + " Hz, expected " +
                                                  std::to_string(kSampleRate));
    }
  }
  MultiStutterClip clip;
  static_cast<PairSpec&>(clip) = spec;
  clip.samples.assign(2 * part_samples, 0.0f);
  std::copy_n(left.samples.begin(), std::min(part_samples, left.samples.size()), clip.samples.begin());
  std::copy_n(right.samples.begin(), std::min(part_samples, right.samples.size()),
              clip.samples.begin() + static_cast<std::ptrdiff_t>(part_samples));
  return clip;
}

AudioLoader directory_loader(std::filesystem::path dir) {
  return [dir = std::move(dir)](const std::string& clip_id) { return load_wav(dir / (clip_id + ".wav")); };
}

std::vector<MultiStutterClip> pair(const std::vector<ClipRecord>& cleaned, const AudioLoader& load) {
  std::map<std::string, AudioClip> cache;
  const auto audio = [&](const std::string& id) -> const AudioClip& {
    auto it = cache.find(id);
    if (it == cache.end()) it = cache.emplace(id, load(id)).first;
    return it->second;
  };
  std::vector<MultiStutterClip> out;
  for (const auto& spec : plan_pairs(cleaned)) {
    out.push_back(concatenate(spec, audio(spec.left_clip_id), audio(spec.right_clip_id)));
  }
  return out;
}

// ---- balancing --------------------------------------------------------------

namespace {
const std::string kNoStutterKey = combination_key(Label::no_stuttered_words, Label::no_stuttered_words);
}

std::map<std::string, SpeakerStats> speaker_stats(std::span<const PairKey> pairs) {
  std::map<std::string, SpeakerStats> stats;
  for (const auto& p : pairs) {
    auto& s = stats[std::string(p.speaker_id)];
    if (p.combination_key == kNoStutterKey) {
      ++s.no_stutter_pairs;
    } else {
      ++s.disfluent_groups[std::string(p.combination_key)];
    }
  }
  for (auto& [speaker, s] : stats) {
    if (s.disfluent_groups.empty()) continue;
    std::size_t total = 0;
    for (const auto& [key, n] : s.disfluent_groups) total += n;
    s.target = static_cast<std::size_t>(
        std::llround(static_cast<double>(total) / static_cast<double>(s.disfluent_groups.size())));
  }
  return stats;
}

std::vector<bool> balance_mask(std::span<const PairKey> pairs, std::uint64_t seed) {
  const auto stats = speaker_stats(pairs);
  std::map<std::string, std::vector<std::size_t>> no_stutter;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].combination_key == kNoStutterKey) no_stutter[std::string(pairs[i].speaker_id)].push_back(i);
  }
  std::vector<bool> keep(pairs.size(), true);
  for (auto& [speaker, idx] : no_stutter) {
    const std::size_t target = stats.at(speaker).target;
    if (idx.size() <= target) continue;
    // Partial Fisher-Yates: the first `target` slots become a uniform sample.
    Rng rng(derive_seed(seed, "balance/" + speaker));
    for (std::size_t i = 0; i < target; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(idx.size() - i));
      std::swap(idx[i], idx[j]);
    }
    for (std::size_t i = target; i < idx.size(); ++i) keep[idx[i]] = false;
  }
  return keep;
}

// ---- speaker groups and splits ----------------------------------------------

std::string_view to_string(SpeakerGroup g) noexcept {
  switch (g) {
    case SpeakerGroup::dominant4: return "4-DS";
    case SpeakerGroup::ds_set1: return "DS-Set 1";
    case SpeakerGroup::ds_set2: return "DS-Set 2";
    case SpeakerGroup::fluencybank: return "FB";
  }
  return "?";
}

SpeakerGroup parse_speaker_group(std::string_view s) {
  const auto n = normalize_label_name(s);
  if (n == "4ds") return SpeakerGroup::dominant4;
  if (n == "dsset1") return SpeakerGroup::ds_set1;
  if (n == "dsset2") return SpeakerGroup::ds_set2;
  if (n == "fb" || n == "fluencybank") return SpeakerGroup::fluencybank;
  throw Error(Errc::invalid_argument, "unknown speaker group '" + std::string(s) + "'");
}

std::vector<SpeakerAssignment> assign_speaker_groups(const std::vector<ClipRecord>& records) {
  std::map<std::string, std::size_t> sep_counts;
  std::set<std::string> fb_speakers;
  for (const auto& r : records) {
    if (r.source == Source::sep28k) {
      ++sep_counts[r.speaker_id];
    } else {
      fb_speakers.insert(r.speaker_id);
    }
  }
  for (const auto& s : fb_speakers) {
    if (sep_counts.count(s)) {
      throw Error(Errc::speaker_leak, "speaker " + s + " appears in both SEP28k and FluencyBank");
    }
  }

  std::vector<std::pair<std::string, std::size_t>> ranked(sep_counts.begin(), sep_counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  std::vector<SpeakerAssignment> out;
  std::size_t set1 = 0, set2 = 0;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    const auto& [speaker, n] = ranked[i];
    if (i < 4) {
      out.push_back({speaker, SpeakerGroup::dominant4});
    } else if (set1 <= set2) {
      out.push_back({speaker, SpeakerGroup::ds_set1});
      set1 += n;
    } else {
      out.push_back({speaker, SpeakerGroup::ds_set2});
      set2 += n;
    }
  }
  for (const auto& s : fb_speakers) out.push_back({s, SpeakerGroup::fluencybank});
  return out;
}

std::vector<SpeakerAssignment> read_speaker_groups(const std::filesystem::path& path) {
  const auto table = read_csv(path);
  const auto speaker = table.column("speaker_id");
  const auto group = table.column("group");
  std::vector<SpeakerAssignment> out;
  for (const auto& row : table.rows) out.push_back({row[speaker], parse_speaker_group(row[group])});
  return out;
}

const std::vector<SplitPlan>& split_plans() {
  using G = SpeakerGroup;
  static const std::vector<SplitPlan> plans = {
      {"SEP-28k-E", {G::dominant4}, {G::ds_set1}, {G::ds_set2}},
      {"SEP-28k-T", {G::ds_set1}, {G::ds_set2}, {G::dominant4}},
      {"SEP-28k-D", {G::ds_set2}, {G::ds_set1}, {G::dominant4}},
      {"SEP-28k-E-merged", {G::dominant4, G::ds_set1}, {G::ds_set2}, {G::fluencybank}},
      {"SEP-28k-T-merged", {G::ds_set1, G::ds_set2}, {G::dominant4}, {G::fluencybank}},
  };
  return plans;
}

const SplitPlan& split_plan(std::string_view name) {
  for (const auto& p : split_plans()) {
    if (p.name == name) return p;
  }
  std::string known;
  for (const auto& p : split_plans()) known += (known.empty() ? "" : ", ") + p.name;
  throw Error(Errc::invalid_argument, "unknown split plan '" + std::string(name) + "' (known: " + known + ")");
}

std::string_view to_string(Partition p) noexcept {
  switch (p) {
    case Partition::train: return "train";
    case Partition::val: return "val";
    case Partition::test: return "test";
  }
  return "?";
}

const std::vector<std::size_t>& Splits::operator[](Partition p) const {
  switch (p) {
    case Partition::train: return train;
    case Partition::val: return val;
    default: return test;
  }
}

Splits build_splits(std::span<const PairSpec> pairs, std::span<const SpeakerAssignment> groups,
                    const SplitPlan& plan) {
  Splits out;
  out.plan = plan;
  for (const auto& a : groups) {
    const auto [it, inserted] = out.speaker_groups.emplace(a.speaker_id, a.group);
    if (!inserted && it->second != a.group) {
      throw Error(Errc::speaker_leak, "speaker " + a.speaker_id + " is assigned to both " +
                                          std::string(to_string(it->second)) + " and " +
                                          std::string(to_string(a.group)));
    }
  }

  std::map<SpeakerGroup, Partition> partition_of;
  const auto claim = [&](const std::vector<SpeakerGroup>& gs, Partition p) {
    for (auto g : gs) {
      if (!partition_of.emplace(g, p).second) {
        throw Error(Errc::speaker_leak, "plan " + plan.name + " uses group " + std::string(to_string(g)) +
                                            " in more than one partition");
      }
    }
  };
  claim(plan.train, Partition::train);
  claim(plan.val, Partition::val);
  claim(plan.test, Partition::test);

  std::map<std::string, Partition> seen;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& p = pairs[i];
    const auto g = out.speaker_groups.find(p.speaker_id);
    if (g == out.speaker_groups.end()) {
      throw Error(Errc::invalid_argument, "speaker " + p.speaker_id + " has no group assignment");
    }
    const auto part = partition_of.find(g->second);
    if (part == partition_of.end()) continue;  // group unused by this plan
    const auto [s, inserted] = seen.emplace(p.speaker_id, part->second);
    if (!inserted && s->second != part->second) {
      throw Error(Errc::speaker_leak, "speaker " + p.speaker_id + " reached two partitions");
    }
    switch (part->second) {
      case Partition::train: out.train.push_back(i); break;
      case Partition::val: out.val.push_back(i); break;
      case Partition::test: out.test.push_back(i); break;
    }
  }
  return out;
}

std::string count_report_json(std::span<const PairSpec> pairs, const Splits& splits) {
  // One row per combination, one column per group and per partition.
  std::map<std::string, std::map<std::string, std::size_t>> rows;
  std::map<std::string, std::size_t> totals;
  const auto bump = [&](const std::string& key, std::string_view column) {
    ++rows[key][std::string(column)];
    ++totals[std::string(column)];
  };
  for (const auto& p : pairs) {
    const auto g = splits.speaker_groups.find(p.speaker_id);
    if (g != splits.speaker_groups.end()) bump(p.combination_key, to_string(g->second));
  }
  for (Partition part : {Partition::train, Partition::val, Partition::test}) {
    for (std::size_t i : splits[part]) bump(pairs[i].combination_key, to_string(part));
  }

  const auto columns = [] {
    std::vector<std::string> c;
    for (auto g : kAllGroups) c.emplace_back(to_string(g));
    for (auto p : {Partition::train, Partition::val, Partition::test}) c.emplace_back(to_string(p));
    return c;
  }();

  ordered_json j;
  j["plan"] = splits.plan.name;
  for (auto [name, gs] : {std::pair{"train", &splits.plan.train}, std::pair{"val", &splits.plan.val},
                          std::pair{"test", &splits.plan.test}}) {
    ordered_json arr = ordered_json::array();
    for (auto g : *gs) arr.push_back(std::string(to_string(g)));
    j["partitions"][name] = arr;
  }
  j["combinations"] = ordered_json::object();
  for (const auto& [key, counts] : rows) {
    ordered_json row;
    for (const auto& c : columns) row[c] = counts.count(c) ? counts.at(c) : 0;
    j["combinations"][key] = row;
  }
  ordered_json tot;
  for (const auto& c : columns) tot[c] = totals.count(c) ? totals.at(c) : 0;
  j["totals"] = tot;
  return j.dump(2);
}

// ---- split manifests --------------------------------------------------------

const std::array<std::string_view, 9> kManifestColumns = {
    "clip_path", "Block", "Interjection", "Prolongation", "SoundRep", "WordRep", "NoStutteredWords",
    "combination_key", "speaker_id"};

CsvTable to_manifest_table(const std::vector<ManifestRow>& rows) {
  CsvTable t;
  t.header.assign(kManifestColumns.begin(), kManifestColumns.end());
  for (const auto& r : rows) {
    std::vector<std::string> row = {r.clip_path};
    for (std::size_t k = 0; k < kNumClasses; ++k) row.push_back(r.labels[k] ? "1" : "0");
    row.push_back(r.combination_key);
    row.push_back(r.speaker_id);
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::vector<ManifestRow> parse_manifest(const CsvTable& table) {
  std::array<std::size_t, kManifestColumns.size()> col{};
  for (std::size_t i = 0; i < col.size(); ++i) col[i] = table.column(kManifestColumns[i]);
  std::vector<ManifestRow> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    ManifestRow m;
    m.clip_path = row[col[0]];
    for (std::size_t k = 0; k < kNumClasses; ++k) {
      const auto& bit = row[col[1 + k]];
      if (bit != "0" && bit != "1") {
        throw Error(Errc::corrupt_file, "manifest row " + std::to_string(r + 2) + ": label bit must be 0 or 1");
      }
      m.labels.set(k, bit == "1");
    }
    m.combination_key = row[col[7]];
    m.speaker_id = row[col[8]];
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<ManifestRow> read_manifest(const std::filesystem::path& path) {
  return parse_manifest(read_csv(path));
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestRow>& rows) {
  write_csv(path, to_manifest_table(rows));
}

std::string pair_file_name(const PairSpec& spec) {
  return spec.left_clip_id + "__" + spec.right_clip_id + ".wav";
}

}  // namespace stutterkit
