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

#include "ledgerehr/record.hpp"

namespace ledgerehr {

std::array<std::string const *, kRecordFieldCount> record_fields(PatientRecord const &r)
{
  return {&r.patient_id,       &r.name,        &r.date_of_birth,        &r.gender,
          &r.age,              &r.blood_pressure, &r.medication_taken, &r.visit_date,
          &r.consulted_prescriber, &r.temperature, &r.height,          &r.weight,
          &r.contact_no};
}

std::array<std::string *, kRecordFieldCount> record_fields(PatientRecord &r)
{
  return {&r.patient_id,       &r.name,        &r.date_of_birth,        &r.gender,
          &r.age,              &r.blood_pressure, &r.medication_taken, &r.visit_date,
          &r.consulted_prescriber, &r.temperature, &r.height,          &r.weight,
          &r.contact_no};
}

bool is_valid_utf8(std::string_view s)
{
  std::size_t i = 0;
  while (i < s.size())
  {
    auto        c   = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    char32_t    cp  = 0;
    if (c < 0x80)
    {
      ++i;
      continue;
    }
    if ((c & 0xe0) == 0xc0)
    {
      len = 2;
      cp  = c & 0x1f;
    }
    else if ((c & 0xf0) == 0xe0)
    {
      len = 3;
      cp  = c & 0x0f;
    }
    else if ((c & 0xf8) == 0xf0)
    {
      len = 4;
      cp  = c & 0x07;
    }
    else
    {
      return false;
    }
    if (i + len > s.size())
    {
      return false;
    }
    for (std::size_t k = 1; k < len; ++k)
    {
      auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xc0) != 0x80)
      {
        return false;
      }
      cp = (cp << 6) | (cc & 0x3f);
    }
    // overlong forms, surrogates, out of range
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) ||
        (cp >= 0xd800 && cp <= 0xdfff) || cp > 0x10ffff)
    {
      return false;
    }
    i += len;
  }
  return true;
}

bool is_iso8601_date(std::string_view s)
{
  if (s.size() != 10 || s[4] != '-' || s[7] != '-')
  {
    return false;
  }
  auto digits = [&](std::size_t from, std::size_t n, int &out) {
    out = 0;
    for (std::size_t i = from; i < from + n; ++i)
    {
      if (s[i] < '0' || s[i] > '9')
      {
        return false;
      }
      out = out * 10 + (s[i] - '0');
    }
    return true;
  };
  int year = 0, month = 0, day = 0;
  if (!digits(0, 4, year) || !digits(5, 2, month) || !digits(8, 2, day))
  {
    return false;
  }
  if (month < 1 || month > 12 || day < 1)
  {
    return false;
  }
  static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
  int  max  = kDays[month - 1] + (month == 2 && leap ? 1 : 0);
  return day <= max;
}

std::vector<RecordViolation> validate_record(PatientRecord const &record)
{
  std::vector<RecordViolation> out;
  auto                         fields = record_fields(record);
  for (std::size_t i = 0; i < kRecordFieldCount; ++i)
  {
    if (!is_valid_utf8(*fields[i]))
    {
      out.push_back({std::string(kRecordFieldNames[i]), "utf-8", Severity::Error});
    }
  }
  if (record.patient_id.empty())
  {
    out.push_back({"patient_id", "non-empty", Severity::Error});
  }
  if (record.name.empty())
  {
    out.push_back({"name", "non-empty", Severity::Error});
  }
  if (!record.date_of_birth.empty() && !is_iso8601_date(record.date_of_birth))
  {
    out.push_back({"date_of_birth", "iso-8601-date", Severity::Advisory});
  }
  if (!record.visit_date.empty() && !is_iso8601_date(record.visit_date))
  {
    out.push_back({"visit_date", "iso-8601-date", Severity::Advisory});
  }
  return out;
}

bool has_blocking_violation(std::vector<RecordViolation> const &violations)
{
  for (auto const &v : violations)
  {
    if (v.severity == Severity::Error)
    {
      return true;
    }
  }
  return false;
}

Bytes canonical_encode_record(PatientRecord const &record)
{
  for (auto const &v : validate_record(record))
  {
    if (v.severity == Severity::Error)
    {
      throw InvalidRecord(v.field, v.rule);
    }
  }
  ByteWriter w;
  for (auto const *field : record_fields(record))
  {
    w.var(*field);
  }
  return std::move(w).take();
}

PatientRecord decode_record(ByteView bytes)
{
  ByteReader    r(bytes);
  PatientRecord record;
  for (auto *field : record_fields(record))
  {
    *field = r.var_string();
  }
  r.expect_end("patient record");
  return record;
}

}  // namespace ledgerehr
