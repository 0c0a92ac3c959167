#pragma once

// Dataset manifest: line-delimited JSON. The first line is a header object
// carrying schema_version plus pipeline stage metadata; every following line
// is one patient record. Volume paths are stored as written (usually relative
// to the manifest's directory) and resolved on access.

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "glio/error.hpp"
#include "glio/nifti.hpp"
#include "glio/rng.hpp"
#include "glio/subtype.hpp"
#include "glio/version.hpp"

namespace glio {

enum class Modality { T1w, T1ce, T2w };
inline constexpr std::array<Modality, 3> kAllModalities = {Modality::T1w, Modality::T1ce, Modality::T2w};

inline std::string modality_key(Modality m) {
  switch (m) {
    case Modality::T1w: return "t1w";
    case Modality::T1ce: return "t1ce";
    case Modality::T2w: return "t2w";
  }
  throw_internal("invalid modality enum");
}

enum class Split { train, test };

inline std::string split_name(Split s) { return s == Split::train ? "train" : "test"; }
inline Split parse_split(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "test") return Split::test;
  throw_data("unknown split '" + std::string(s) + "' (expected train|test)");
}

enum class Sex { male, female };

struct PatientRecord {
  std::string id;
  std::map<Modality, std::string> volume_paths;  // all three modalities required
  std::string mask_path;
  GliomaSubtype subtype = GliomaSubtype::I;
  std::optional<int> age;
  std::optional<Sex> sex;
  std::optional<Split> split;
};

struct DatasetManifest {
  int schema_version = kManifestSchemaVersion;
  std::string stage = "raw";  // raw | preprocessed
  std::vector<PatientRecord> records;
  std::filesystem::path base_dir;  // directory the path fields are relative to

  std::filesystem::path resolve(const std::string& p) const {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp : base_dir / fp;
  }
  std::filesystem::path volume_path(const PatientRecord& r, Modality m) const {
    return resolve(r.volume_paths.at(m));
  }
  std::filesystem::path mask_path(const PatientRecord& r) const { return resolve(r.mask_path); }

  const PatientRecord* find(const std::string& id) const {
    for (const auto& r : records)
      if (r.id == id) return &r;
    return nullptr;
  }
};

namespace detail {

inline nlohmann::ordered_json record_to_json(const PatientRecord& r) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  for (Modality m : kAllModalities) j[modality_key(m)] = r.volume_paths.at(m);
  j["mask"] = r.mask_path;
  j["subtype"] = subtype_name(r.subtype);
  if (r.age) j["age"] = *r.age;
  if (r.sex) j["sex"] = (*r.sex == Sex::male) ? "M" : "F";
  if (r.split) j["split"] = split_name(*r.split);
  return j;
}

inline PatientRecord record_from_json(const nlohmann::json& j, int line_no) {
  const std::string where = "manifest line " + std::to_string(line_no);
  if (!j.contains("id") || !j["id"].is_string()) throw_data(where + ": missing id");
  PatientRecord r;
  r.id = j["id"].get<std::string>();
  for (Modality m : kAllModalities) {
    const std::string key = modality_key(m);
    if (!j.contains(key) || !j[key].is_string() || j[key].get<std::string>().empty())
      throw_data("record '" + r.id + "': missing modality " + key);
    r.volume_paths[m] = j[key].get<std::string>();
  }
  if (!j.contains("mask") || !j["mask"].is_string())
    throw_data("record '" + r.id + "': missing mask path");
  r.mask_path = j["mask"].get<std::string>();
  if (!j.contains("subtype")) throw_data("record '" + r.id + "': missing subtype");
  r.subtype = parse_subtype(j["subtype"].get<std::string>());
  if (j.contains("age")) r.age = j["age"].get<int>();
  if (j.contains("sex")) {
    std::string s = j["sex"].get<std::string>();
    if (s == "M") r.sex = Sex::male;
    else if (s == "F") r.sex = Sex::female;
    else throw_data("record '" + r.id + "': bad sex value '" + s + "'");
  }
  if (j.contains("split")) r.split = parse_split(j["split"].get<std::string>());
  return r;
}

}  // namespace detail

// Existence/readability validation level for load_manifest.
enum class ManifestValidation {
  structure_only,  // parse + id/modality checks
  check_files,     // also verify files exist and volume headers parse
};

inline DatasetManifest load_manifest(const std::filesystem::path& path,
                                     ManifestValidation level = ManifestValidation::check_files) {
  std::ifstream f(path);
  if (!f) throw_data("manifest: file not found: " + path.string());
  DatasetManifest m;
  m.base_dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");

  std::string line;
  int line_no = 0;
  bool have_header = false;
  std::set<std::string> seen_ids;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw_data("manifest: line " + std::to_string(line_no) + " is not valid JSON: " + e.what());
    }
    if (!have_header) {
      if (!j.contains("schema_version"))
        throw_data("manifest: first line must be a header with schema_version");
      m.schema_version = j["schema_version"].get<int>();
      if (m.schema_version != kManifestSchemaVersion)
        throw_data("manifest: unsupported schema_version " + std::to_string(m.schema_version));
      if (j.contains("stage")) m.stage = j["stage"].get<std::string>();
      have_header = true;
      continue;
    }
    PatientRecord r = detail::record_from_json(j, line_no);
    if (!seen_ids.insert(r.id).second) throw_data("manifest: duplicate id '" + r.id + "'");
    m.records.push_back(std::move(r));
  }
  if (!have_header) throw_data("manifest: empty file: " + path.string());

  if (level == ManifestValidation::check_files) {
    for (const auto& r : m.records) {
      for (Modality mod : kAllModalities) {
        auto p = m.volume_path(r, mod);
        if (!std::filesystem::exists(p))
          throw_data("record '" + r.id + "': missing file for " + modality_key(mod) + ": " + p.string());
        try {
          read_nifti_geometry(p);
        } catch (const Error&) {
          throw_data("record '" + r.id + "': unreadable volume " + p.string());
        }
      }
      auto mp = m.mask_path(r);
      if (!std::filesystem::exists(mp))
        throw_data("record '" + r.id + "': missing file for mask: " + mp.string());
      try {
        read_nifti_geometry(mp);
      } catch (const Error&) {
        throw_data("record '" + r.id + "': unreadable volume " + mp.string());
      }
    }
  }
  return m;
}

inline void save_manifest(const DatasetManifest& m, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw_data("manifest: cannot open for write: " + path.string());
  nlohmann::ordered_json header;
  header["schema_version"] = m.schema_version;
  header["kind"] = "glioma-cohort-manifest";
  header["stage"] = m.stage;
  int n_train = 0, n_test = 0;
  for (const auto& r : m.records) {
    if (r.split == Split::train) ++n_train;
    if (r.split == Split::test) ++n_test;
  }
  if (n_train + n_test > 0) {
    header["split_counts"] = {{"train", n_train}, {"test", n_test}};
  }
  f << header.dump() << "\n";
  for (const auto& r : m.records) f << detail::record_to_json(r).dump() << "\n";
  if (!f) throw_data("manifest: write failed: " + path.string());
}

// Per-case Bernoulli split: each record lands in the test set independently
// with probability test_probability. The realized assignment is returned (and
// normally persisted into the manifest) so downstream stages see fixed counts.
inline std::map<std::string, Split> random_split(const std::vector<PatientRecord>& records,
                                                 double test_probability, uint64_t seed) {
  if (records.empty()) throw_data("random_split: empty record list");
  if (!(test_probability >= 0.0 && test_probability <= 1.0))
    throw_usage("random_split: test probability must be in [0,1]");
  Rng rng = Rng::derive(seed, {0x5B117ULL});
  std::map<std::string, Split> out;
  for (const auto& r : records)
    out[r.id] = rng.bernoulli(test_probability) ? Split::test : Split::train;
  return out;
}

inline void apply_split(DatasetManifest& m, const std::map<std::string, Split>& split) {
  for (auto& r : m.records) r.split = split.at(r.id);
}

}  // namespace glio
