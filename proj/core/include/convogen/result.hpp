#pragma once

#include <optional>
#include <string>
#include <utility>

namespace convogen {

// Expected, data-dependent rejection (as opposed to exceptions, which signal
// broken preconditions or infrastructure failures). The code is a stable
// enum-like string that ends up in manifests and rejected-record files.
struct Failure {
    std::string code;
    std::string detail;

    bool operator==(const Failure&) const = default;
};

template <typename T>
class Result {
public:
    static Result success(T value) {
        Result r;
        r.value_ = std::move(value);
        return r;
    }

    static Result failure(std::string code, std::string detail = {}) {
        Result r;
        r.failure_ = Failure{std::move(code), std::move(detail)};
        return r;
    }

    bool ok() const { return value_.has_value(); }
    explicit operator bool() const { return ok(); }

    const T& value() const& { return *value_; }
    T& value() & { return *value_; }
    T&& take() && { return std::move(*value_); }

    const Failure& error() const { return *failure_; }

private:
    std::optional<T> value_;
    std::optional<Failure> failure_;
};

}  // namespace convogen
