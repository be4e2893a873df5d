//------------------------------------------------------------------------------
//
//   Copyright 2026 The LedgerEHR Authors
//
//   Licensed under the Apache License, Version 2.0 (the "License");
//   you may not use this file except in compliance with the License.
//   You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
//   Unless required by applicable law or agreed to in writing, software
//   distributed under the License is distributed on an "AS IS" BASIS,
//   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//   See the License for the specific language governing permissions and
//   limitations under the License.
//
//------------------------------------------------------------------------------

#pragma once

#include "ledgerehr/bytes.hpp"

#include <array>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ledgerehr {

/// One EHR row. Every field is a string: real-world intake data is dirty
/// (ages like "456", blood groups in the blood-pressure column), so only the
/// unambiguous rules are enforced.
struct PatientRecord
{
  std::string patient_id;
  std::string name;
  std::string date_of_birth;
  std::string gender;
  std::string age;
  std::string blood_pressure;
  std::string medication_taken;
  std::string visit_date;
  std::string consulted_prescriber;
  std::string temperature;
  std::string height;
  std::string weight;
  std::string contact_no;

  bool operator==(PatientRecord const &) const = default;
};

inline constexpr std::size_t kRecordFieldCount = 13;

/// Field names in canonical encoding order (also the JSON keys).
inline constexpr std::array<std::string_view, kRecordFieldCount> kRecordFieldNames{
    "patient_id", "name",        "date_of_birth", "gender",      "age",
    "blood_pressure", "medication_taken", "visit_date", "consulted_prescriber",
    "temperature", "height",     "weight",        "contact_no"};

std::array<std::string const *, kRecordFieldCount> record_fields(PatientRecord const &r);
std::array<std::string *, kRecordFieldCount>       record_fields(PatientRecord &r);

enum class Severity
{
  Error,     // blocks submission
  Advisory,  // reported, does not block
};

struct RecordViolation
{
  std::string field;
  std::string rule;
  Severity    severity{Severity::Error};

  bool operator==(RecordViolation const &) const = default;
};

/// Rules: patient_id and name non-empty, every field valid UTF-8 (Error);
/// date_of_birth and visit_date are YYYY-MM-DD calendar dates when non-empty
/// (Advisory).
std::vector<RecordViolation> validate_record(PatientRecord const &record);

bool has_blocking_violation(std::vector<RecordViolation> const &violations);

bool is_valid_utf8(std::string_view s);
bool is_iso8601_date(std::string_view s);

class InvalidRecord : public std::invalid_argument
{
public:
  InvalidRecord(std::string field, std::string reason)
    : std::invalid_argument("invalid record: " + field + ": " + reason)
    , field_(std::move(field))
    , reason_(std::move(reason))
  {}

  std::string const &field() const noexcept
  {
    return field_;
  }
  std::string const &reason() const noexcept
  {
    return reason_;
  }

private:
  std::string field_;
  std::string reason_;
};

/// Thirteen segments of 4-byte big-endian length || UTF-8 bytes, in
/// kRecordFieldNames order. Throws InvalidRecord on a blocking violation.
Bytes         canonical_encode_record(PatientRecord const &record);
PatientRecord decode_record(ByteView bytes);

}  // namespace ledgerehr
