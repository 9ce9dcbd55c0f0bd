#pragma once

// Pass/fail reports shared by all checkers.

#include <algorithm>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace operadkit {

struct Violation {
    std::string check;
    nlohmann::json witness;
};

class Report {
public:
    explicit Report(std::string name = {}, std::size_t witness_cap = 16)
        : name_(std::move(name)), cap_(witness_cap)
    {
    }

    const std::string& name() const { return name_; }
    bool passed() const { return failures_ == 0; }
    std::size_t checked() const { return checked_; }
    std::size_t failures() const { return failures_; }
    double max_residual() const { return max_residual_; }
    const std::vector<Violation>& violations() const { return violations_; }

    void count(std::size_t k = 1) { checked_ += k; }
    void residual(double r) { max_residual_ = std::max(max_residual_, r); }

    void fail(std::string check, nlohmann::json witness)
    {
        ++failures_;
        if (violations_.size() < cap_)
            violations_.push_back({std::move(check), std::move(witness)});
    }

    /// Checks `ok`; records a failure carrying the lazily built witness.
    template <class F>
    bool expect(bool ok, const std::string& check, F&& witness)
    {
        ++checked_;
        if (!ok)
            fail(check, witness());
        return ok;
    }

    void merge(const Report& other)
    {
        checked_ += other.checked_;
        failures_ += other.failures_;
        max_residual_ = std::max(max_residual_, other.max_residual_);
        for (const auto& v : other.violations_)
            if (violations_.size() < cap_)
                violations_.push_back(v);
    }

    nlohmann::json to_json() const
    {
        nlohmann::json j;
        j["name"] = name_;
        j["passed"] = passed();
        j["checked"] = checked_;
        j["failures"] = failures_;
        j["max_residual"] = max_residual_;
        auto& vs = j["violations"] = nlohmann::json::array();
        for (const auto& v : violations_)
            vs.push_back({{"check", v.check}, {"witness", v.witness}});
        return j;
    }

private:
    std::string name_;
    std::size_t cap_;
    std::size_t checked_ = 0;
    std::size_t failures_ = 0;
    double max_residual_ = 0.0;
    std::vector<Violation> violations_;
};

} // namespace operadkit
