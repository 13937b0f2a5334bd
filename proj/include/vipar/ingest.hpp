#pragma once

// Event and roster ingestion, identity normalization and person resolution.
//
// Event files share one schema:
//
//   event_id,event_type,date,crime_flags,participants
//   E1,arrest,2014-03-02,violent|firearm,"DOE JOHN,1990-01-01,arrestee"
//
// Each participant is one quoted `name,dob,role` cell; an event with several
// participants repeats the cell in further columns. The dob may be empty.
//
// CIRV roster files use `name,dob,status` with status `active|non_active`.

#include <algorithm>
#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vipar/csv.hpp"
#include "vipar/date.hpp"
#include "vipar/error.hpp"

namespace vipar {

enum class EventType : std::uint8_t { arrest, field_interview, offense, victimization, shooting };

inline constexpr std::array<EventType, 5> kAllEventTypes = {
    EventType::arrest, EventType::field_interview, EventType::offense, EventType::victimization,
    EventType::shooting};

inline std::string_view to_string(EventType t) {
    switch (t) {
    case EventType::arrest: return "arrest";
    case EventType::field_interview: return "field_interview";
    case EventType::offense: return "offense";
    case EventType::victimization: return "victimization";
    case EventType::shooting: return "shooting";
    }
    return "?";
}

inline std::optional<EventType> parse_event_type(std::string_view s) {
    for (auto t : kAllEventTypes)
        if (to_string(t) == s) return t;
    return std::nullopt;
}

enum class CrimeFlag : std::uint8_t { violent = 1, misdemeanor = 2, firearm = 4, shooting = 8 };

inline constexpr std::array<CrimeFlag, 4> kAllCrimeFlags = {CrimeFlag::violent, CrimeFlag::misdemeanor,
                                                            CrimeFlag::firearm, CrimeFlag::shooting};

inline std::string_view to_string(CrimeFlag f) {
    switch (f) {
    case CrimeFlag::violent: return "violent";
    case CrimeFlag::misdemeanor: return "misdemeanor";
    case CrimeFlag::firearm: return "firearm";
    case CrimeFlag::shooting: return "shooting";
    }
    return "?";
}

class CrimeFlags {
public:
    constexpr CrimeFlags() = default;
    constexpr CrimeFlags(std::initializer_list<CrimeFlag> flags) {
        for (auto f : flags) insert(f);
    }

    constexpr bool has(CrimeFlag f) const noexcept { return bits_ & static_cast<std::uint8_t>(f); }
    constexpr void insert(CrimeFlag f) noexcept { bits_ |= static_cast<std::uint8_t>(f); }
    constexpr bool contains_all(CrimeFlags other) const noexcept { return (bits_ & other.bits_) == other.bits_; }
    constexpr bool empty() const noexcept { return bits_ == 0; }
    constexpr std::uint8_t bits() const noexcept { return bits_; }

    // Pipe-separated, canonical order.
    std::string to_string() const {
        std::string out;
        for (auto f : kAllCrimeFlags) {
            if (!has(f)) continue;
            if (!out.empty()) out.push_back('|');
            out += vipar::to_string(f);
        }
        return out;
    }

    static std::optional<CrimeFlags> parse(std::string_view cell) {
        CrimeFlags flags;
        if (cell.empty()) return flags;
        for (const auto& part : csv::split(cell, '|')) {
            bool found = false;
            for (auto f : kAllCrimeFlags) {
                if (vipar::to_string(f) == part) {
                    flags.insert(f);
                    found = true;
                }
            }
            if (!found) return std::nullopt;
        }
        return flags;
    }

    friend constexpr auto operator<=>(CrimeFlags, CrimeFlags) = default;

private:
    std::uint8_t bits_ = 0;
};

inline constexpr CrimeFlags kShootingImpliedFlags{CrimeFlag::violent, CrimeFlag::firearm, CrimeFlag::shooting};

enum class Role : std::uint8_t { suspect, victim, arrestee, stopped };

inline constexpr std::array<Role, 4> kAllRoles = {Role::suspect, Role::victim, Role::arrestee, Role::stopped};

inline std::string_view to_string(Role r) {
    switch (r) {
    case Role::suspect: return "suspect";
    case Role::victim: return "victim";
    case Role::arrestee: return "arrestee";
    case Role::stopped: return "stopped";
    }
    return "?";
}

inline std::optional<Role> parse_role(std::string_view s) {
    for (auto r : kAllRoles)
        if (to_string(r) == s) return r;
    return std::nullopt;
}

// Suspects and arrestees are treated as having committed the event's crime.
constexpr bool is_offender_role(Role r) noexcept { return r == Role::suspect || r == Role::arrestee; }

// Uppercase, drop apostrophes, map other punctuation to spaces, collapse
// runs of whitespace and trim. Bytes >= 0x80 pass through unchanged.
inline std::string normalize_name(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    bool pending_space = false;
    for (char ch : raw) {
        const auto uc = static_cast<unsigned char>(ch);
        if (ch == '\'') continue;
        const bool keep = uc >= 0x80 || (uc >= '0' && uc <= '9') || (uc >= 'A' && uc <= 'Z') ||
                          (uc >= 'a' && uc <= 'z');
        if (!keep) {
            pending_space = true;
            continue;
        }
        if (pending_space && !out.empty()) out.push_back(' ');
        pending_space = false;
        out.push_back((uc >= 'a' && uc <= 'z') ? static_cast<char>(uc - 'a' + 'A') : ch);
    }
    return out;
}

struct PersonKey {
    std::string full_name;
    std::optional<Date> dob;

    // Normalizes the name; throws if it normalizes to empty.
    static PersonKey make(std::string_view raw_name, std::optional<Date> dob) {
        PersonKey key{normalize_name(raw_name), dob};
        if (key.full_name.empty()) throw IngestError("person name is empty after normalization");
        return key;
    }

    std::string dob_string() const { return dob ? dob->to_string() : std::string{}; }

    friend auto operator<=>(const PersonKey&, const PersonKey&) = default;
    friend bool operator==(const PersonKey&, const PersonKey&) = default;
};

struct Participant {
    PersonKey key;
    Role role = Role::suspect;

    friend auto operator<=>(const Participant&, const Participant&) = default;
    friend bool operator==(const Participant&, const Participant&) = default;
};

// Field order defines the canonical sort: date first.
struct EventRecord {
    Date date;
    EventType type = EventType::arrest;
    std::string event_id;
    CrimeFlags flags;
    std::vector<Participant> participants;

    friend auto operator<=>(const EventRecord&, const EventRecord&) = default;
    friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

struct RowError {
    std::string source;
    std::size_t line = 0;
    std::string message;

    std::string to_string() const { return source + ":" + std::to_string(line) + ": " + message; }
};

template <class T>
struct ParseResult {
    std::vector<T> records;
    std::vector<RowError> errors;
};

struct ParseOptions {
    std::optional<DateRange> window;
    std::string source_name = "<stream>";
};

inline constexpr std::array<std::string_view, 5> kEventHeader = {"event_id", "event_type", "date",
                                                                 "crime_flags", "participants"};

namespace detail {

inline std::ifstream open_or_throw(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError("cannot open " + path.string());
    return in;
}

inline bool header_matches(const std::vector<std::string>& got, std::span<const std::string_view> want) {
    if (got.size() != want.size()) return false;
    for (std::size_t i = 0; i < want.size(); ++i)
        if (got[i] != want[i]) return false;
    return true;
}

inline std::string join_header(std::span<const std::string_view> h) {
    std::string out;
    for (auto s : h) {
        if (!out.empty()) out.push_back(',');
        out += s;
    }
    return out;
}

// Returns an error message or the parsed participant.
inline std::optional<Participant> parse_participant(std::string_view cell, std::string& error) {
    const auto parts = csv::split(cell, ',');
    if (parts.size() != 3) {
        error = "invalid participant '" + std::string(cell) + "' (expected name,dob,role)";
        return std::nullopt;
    }
    const auto name = normalize_name(parts[0]);
    if (name.empty()) {
        error = "invalid participant '" + std::string(cell) + "' (empty name)";
        return std::nullopt;
    }
    std::optional<Date> dob;
    if (!parts[1].empty()) {
        dob = Date::parse(parts[1]);
        if (!dob) {
            error = "invalid date of birth '" + parts[1] + "'";
            return std::nullopt;
        }
    }
    const auto role = parse_role(parts[2]);
    if (!role) {
        error = "invalid role '" + parts[2] + "'";
        return std::nullopt;
    }
    return Participant{PersonKey{name, dob}, *role};
}

} // namespace detail

// Parses one event dataset. Well-formed rows become records in file order;
// malformed rows are reported with their line number and skipped. Shooting
// events are completed with the violent, firearm and shooting flags.
inline ParseResult<EventRecord> parse_events(std::istream& in, EventType schema, const ParseOptions& opts = {}) {
    ParseResult<EventRecord> result;
    csv::Reader reader(in);
    std::vector<std::string> row;
    if (!reader.next(row) || !detail::header_matches(row, kEventHeader))
        throw IngestError(opts.source_name + ": header must be '" + detail::join_header(kEventHeader) + "'");

    while (reader.next(row)) {
        const auto line = reader.record_line();
        auto fail = [&](std::string msg) { result.errors.push_back({opts.source_name, line, std::move(msg)}); };
        if (row.size() == 1 && row[0].empty()) continue; // blank line
        if (row.size() < 4) {
            fail("missing columns");
            continue;
        }
        if (row.size() < 5) {
            fail("missing participant column");
            continue;
        }
        EventRecord ev;
        ev.event_id = row[0];
        if (ev.event_id.empty()) {
            fail("empty event_id");
            continue;
        }
        const auto type = parse_event_type(row[1]);
        if (!type) {
            fail("unknown event type '" + row[1] + "'");
            continue;
        }
        if (*type != schema) {
            fail("event type '" + row[1] + "' does not match file schema '" + std::string(to_string(schema)) + "'");
            continue;
        }
        ev.type = *type;
        const auto date = Date::parse(row[2]);
        if (!date) {
            fail("invalid date '" + row[2] + "'");
            continue;
        }
        if (opts.window && !opts.window->contains(*date)) {
            fail("date " + row[2] + " outside study window");
            continue;
        }
        ev.date = *date;
        const auto flags = CrimeFlags::parse(row[3]);
        if (!flags) {
            fail("invalid crime flags '" + row[3] + "'");
            continue;
        }
        ev.flags = *flags;
        if (ev.type == EventType::shooting)
            for (auto f : kAllCrimeFlags)
                if (kShootingImpliedFlags.has(f)) ev.flags.insert(f);

        std::string error;
        bool ok = true;
        for (std::size_t i = 4; i < row.size(); ++i) {
            if (row[i].empty()) continue;
            auto p = detail::parse_participant(row[i], error);
            if (!p) {
                ok = false;
                break;
            }
            ev.participants.push_back(std::move(*p));
        }
        if (!ok) {
            fail(error);
            continue;
        }
        if (ev.participants.empty()) {
            fail("no participants");
            continue;
        }
        result.records.push_back(std::move(ev));
    }
    return result;
}

inline ParseResult<EventRecord> parse_events(const std::filesystem::path& path, EventType schema,
                                             ParseOptions opts = {}) {
    auto in = detail::open_or_throw(path);
    opts.source_name = path.filename().string();
    return parse_events(in, schema, opts);
}

inline void write_events(std::ostream& out, std::span<const EventRecord> events) {
    out << detail::join_header(kEventHeader) << '\n';
    std::vector<std::string> fields;
    for (const auto& ev : events) {
        fields.clear();
        fields.push_back(ev.event_id);
        fields.emplace_back(to_string(ev.type));
        fields.push_back(ev.date.to_string());
        fields.push_back(ev.flags.to_string());
        for (const auto& p : ev.participants)
            fields.push_back(p.key.full_name + "," + p.key.dob_string() + "," + std::string(to_string(p.role)));
        csv::write_row(out, fields);
    }
}

// ---------------------------------------------------------------------------
// CIRV roster

struct CirvEntry {
    PersonKey key;
    bool active = false;

    friend bool operator==(const CirvEntry&, const CirvEntry&) = default;
};

inline constexpr std::array<std::string_view, 3> kCirvHeader = {"name", "dob", "status"};

// Duplicate keys collapse to one entry (first-seen position); active wins.
inline ParseResult<CirvEntry> load_cirv(std::istream& in, const ParseOptions& opts = {}) {
    ParseResult<CirvEntry> result;
    csv::Reader reader(in);
    std::vector<std::string> row;
    if (!reader.next(row) || !detail::header_matches(row, kCirvHeader))
        throw IngestError(opts.source_name + ": header must be '" + detail::join_header(kCirvHeader) + "'");

    std::map<PersonKey, std::size_t> seen;
    while (reader.next(row)) {
        const auto line = reader.record_line();
        auto fail = [&](std::string msg) { result.errors.push_back({opts.source_name, line, std::move(msg)}); };
        if (row.size() == 1 && row[0].empty()) continue;
        if (row.size() < 3 || row[2].empty()) {
            fail("missing active flag");
            continue;
        }
        std::optional<Date> dob;
        if (!row[1].empty()) {
            dob = Date::parse(row[1]);
            if (!dob) {
                fail("invalid date '" + row[1] + "'");
                continue;
            }
        }
        bool active;
        if (row[2] == "active")
            active = true;
        else if (row[2] == "non_active")
            active = false;
        else {
            fail("invalid status '" + row[2] + "' (expected active or non_active)");
            continue;
        }
        PersonKey key{normalize_name(row[0]), dob};
        if (key.full_name.empty()) {
            fail("empty name");
            continue;
        }
        if (auto it = seen.find(key); it != seen.end()) {
            result.records[it->second].active = result.records[it->second].active || active;
            continue;
        }
        seen.emplace(key, result.records.size());
        result.records.push_back({std::move(key), active});
    }
    return result;
}

inline ParseResult<CirvEntry> load_cirv(const std::filesystem::path& path, ParseOptions opts = {}) {
    auto in = detail::open_or_throw(path);
    opts.source_name = path.filename().string();
    return load_cirv(in, opts);
}

inline void write_cirv(std::ostream& out, std::span<const CirvEntry> entries) {
    out << detail::join_header(kCirvHeader) << '\n';
    for (const auto& e : entries)
        csv::write_row(out, {e.key.full_name, e.key.dob_string(), e.active ? "active" : "non_active"});
}

struct CirvCounts {
    std::size_t active = 0;
    std::size_t non_active = 0;
    friend bool operator==(const CirvCounts&, const CirvCounts&) = default;
};

inline CirvCounts cirv_counts(std::span<const CirvEntry> entries) {
    CirvCounts c;
    for (const auto& e : entries) (e.active ? c.active : c.non_active)++;
    return c;
}

// ---------------------------------------------------------------------------
// Person resolution

using PersonId = std::uint32_t;

// Age in tenths of a year (18.3 years -> 183).
class Age {
public:
    constexpr Age() = default;
    static constexpr Age from_tenths(int tenths) {
        Age a;
        a.tenths_ = tenths;
        return a;
    }
    // Completed birthdays plus the elapsed share of the current birthday
    // year, truncated to one decimal.
    static Age at(Date dob, Date snapshot) {
        int years = snapshot.year() - dob.year();
        if (dob.plus_years(years) > snapshot) --years;
        const long long into = snapshot - dob.plus_years(years);
        const long long span = dob.plus_years(years + 1) - dob.plus_years(years);
        return from_tenths(static_cast<int>(10LL * years + into * 10LL / span));
    }
    constexpr int tenths() const noexcept { return tenths_; }
    constexpr double years() const noexcept { return tenths_ / 10.0; }
    friend constexpr auto operator<=>(Age, Age) = default;

private:
    int tenths_ = 0;
};

enum class CirvStatus : std::uint8_t { none, active, non_active };

struct Participation {
    std::size_t event_index = 0; // into PersonStore::events
    Role role = Role::suspect;

    friend auto operator<=>(const Participation&, const Participation&) = default;
};

struct Person {
    PersonId id = 0;
    PersonKey key;
    std::optional<Age> age; // absent when dob is missing or after the snapshot
    std::vector<Participation> participations;
    CirvStatus cirv_status = CirvStatus::none;

    bool matchable() const noexcept { return key.dob.has_value(); }
};

// Immutable once built; safe for concurrent reads.
struct PersonStore {
    std::vector<EventRecord> events; // canonical order
    std::vector<Person> persons;     // index == PersonId
    std::map<PersonKey, PersonId> by_key;
    // Distinct persons of each event with their first-listed role.
    std::vector<std::vector<std::pair<PersonId, Role>>> event_participants;

    std::optional<PersonId> find(const PersonKey& key) const {
        if (auto it = by_key.find(key); it != by_key.end()) return it->second;
        return std::nullopt;
    }

    std::size_t participation_count() const {
        std::size_t n = 0;
        for (const auto& p : persons) n += p.participations.size();
        return n;
    }
};

// One Person per distinct key. Person ids follow key order and events are
// stored in canonical (sorted) order, so the result does not depend on the
// order of the input events. Every participant slot becomes one participation.
inline PersonStore resolve_persons(std::vector<EventRecord> events, Date snapshot) {
    PersonStore store;
    std::sort(events.begin(), events.end());
    store.events = std::move(events);

    for (const auto& ev : store.events)
        for (const auto& p : ev.participants) store.by_key.emplace(p.key, 0);
    store.persons.reserve(store.by_key.size());
    PersonId next = 0;
    for (auto& [key, id] : store.by_key) {
        id = next++;
        Person person;
        person.id = id;
        person.key = key;
        if (key.dob && *key.dob <= snapshot) person.age = Age::at(*key.dob, snapshot);
        store.persons.push_back(std::move(person));
    }

    store.event_participants.resize(store.events.size());
    for (std::size_t e = 0; e < store.events.size(); ++e) {
        auto& distinct = store.event_participants[e];
        for (const auto& p : store.events[e].participants) {
            const PersonId id = store.by_key.at(p.key);
            store.persons[id].participations.push_back({e, p.role});
            const bool dup = std::any_of(distinct.begin(), distinct.end(),
                                         [&](const auto& d) { return d.first == id; });
            if (!dup) distinct.emplace_back(id, p.role);
        }
    }
    // Events are date-sorted, so event_index order is date order.
    for (auto& person : store.persons) std::sort(person.participations.begin(), person.participations.end());
    return store;
}

inline void apply_cirv(PersonStore& store, std::span<const CirvEntry> roster) {
    for (const auto& entry : roster) {
        auto id = store.find(entry.key);
        if (!id) continue;
        auto& status = store.persons[*id].cirv_status;
        if (entry.active)
            status = CirvStatus::active;
        else if (status == CirvStatus::none)
            status = CirvStatus::non_active;
    }
}

} // namespace vipar
