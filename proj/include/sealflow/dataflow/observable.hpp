#pragma once

#include <cstddef>
#include <exception>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace sealflow::dataflow {

/// What on_error receives. `index` is the position of the failing element in
/// the input of the operator that failed, when an operator failed.
struct StreamError {
  std::string message;
  std::optional<std::size_t> index;
};

namespace detail {

/// Operator failure travelling up to subscribe().
class OperatorFailure : public std::runtime_error {
 public:
  OperatorFailure(const std::string& what, std::size_t index) : std::runtime_error(what), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

/// Exception raised by a subscriber callback; rethrown to the subscribe caller.
struct CallbackFailure {
  std::exception_ptr error;
};

inline std::string describe(std::exception_ptr e) {
  try {
    std::rethrow_exception(e);
  } catch (const std::exception& ex) {
    return ex.what();
  } catch (...) {
    return "unknown error";
  }
}

}  // namespace detail

template <class S>
class ReducedObservable;

/// Cold observable: every subscribe() runs the whole chain again from the source
/// on the caller's thread. Operators fail fast: the first throwing callback
/// ends the stream with on_error and on_completed never fires.
template <class T>
class Observable {
 public:
  using OnNext = std::function<void(const T&)>;
  using Source = std::function<void(const OnNext&)>;

  explicit Observable(Source source) : source_(std::move(source)) {}

  /// `producer` receives an emit function taking one batch at a time.
  template <class Producer>
  static Observable from_source(Producer producer) {
    return Observable([producer](const OnNext& next) {
      producer([&next](const std::vector<T>& batch) {
        for (const T& item : batch) next(item);
      });
    });
  }

  static Observable from_table(std::vector<T> items) {
    return Observable([items = std::move(items)](const OnNext& next) {
      for (const T& item : items) next(item);
    });
  }

  template <class F>
  auto map(F fn) const {
    using R = std::decay_t<std::invoke_result_t<F&, const T&>>;
    return Observable<R>([source = source_, fn](const typename Observable<R>::OnNext& next) mutable {
      std::size_t index = 0;
      source([&](const T& item) {
        std::optional<R> out;
        try {
          out.emplace(fn(item));
        } catch (const std::exception& e) {
          throw detail::OperatorFailure(std::string("map: ") + e.what(), index);
        } catch (...) {
          throw detail::OperatorFailure("map: unknown error", index);
        }
        ++index;
        next(*out);
      });
    });
  }

  template <class P>
  Observable filter(P pred) const {
    return Observable([source = source_, pred](const OnNext& next) mutable {
      std::size_t index = 0;
      source([&](const T& item) {
        bool keep = false;
        try {
          keep = pred(item);
        } catch (const std::exception& e) {
          throw detail::OperatorFailure(std::string("filter: ") + e.what(), index);
        } catch (...) {
          throw detail::OperatorFailure("filter: unknown error", index);
        }
        ++index;
        if (keep) next(item);
      });
    });
  }

  /// Terminal fold: the result emits exactly one value, the final state.
  template <class S, class F>
  ReducedObservable<S> reduce(F fn, S init) const;

  void subscribe(const OnNext& on_next, const std::function<void(const StreamError&)>& on_error,
                 const std::function<void()>& on_completed) const {
    run(source_, on_next, on_error, on_completed);
  }

  const Source& source() const noexcept { return source_; }

  template <class U>
  static void run(const typename Observable<U>::Source& source, const typename Observable<U>::OnNext& on_next,
                  const std::function<void(const StreamError&)>& on_error, const std::function<void()>& on_completed) {
    try {
      source([&](const U& item) {
        try {
          on_next(item);
        } catch (...) {
          throw detail::CallbackFailure{std::current_exception()};
        }
      });
    } catch (const detail::CallbackFailure& f) {
      std::rethrow_exception(f.error);
    } catch (const detail::OperatorFailure& f) {
      if (on_error) on_error(StreamError{f.what(), f.index()});
      return;
    } catch (const std::exception& e) {
      if (on_error) on_error(StreamError{e.what(), std::nullopt});
      return;
    }
    if (on_completed) on_completed();
  }

  static void run(const Source& source, const OnNext& on_next, const std::function<void(const StreamError&)>& on_error,
                  const std::function<void()>& on_completed) {
    run<T>(source, on_next, on_error, on_completed);
  }

 private:
  Source source_;
};

/// Result of reduce(): only subscription is possible, so a reduce is always
/// the last stage of a chain.
template <class S>
class ReducedObservable {
 public:
  explicit ReducedObservable(typename Observable<S>::Source source) : source_(std::move(source)) {}

  void subscribe(const typename Observable<S>::OnNext& on_next,
                 const std::function<void(const StreamError&)>& on_error,
                 const std::function<void()>& on_completed) const {
    Observable<S>::run(source_, on_next, on_error, on_completed);
  }

 private:
  typename Observable<S>::Source source_;
};

template <class T>
template <class S, class F>
ReducedObservable<S> Observable<T>::reduce(F fn, S init) const {
  return ReducedObservable<S>([source = source_, fn, init](const typename Observable<S>::OnNext& next) mutable {
    S acc = init;
    std::size_t index = 0;
    source([&](const T& item) {
      try {
        acc = fn(std::move(acc), item);
      } catch (const std::exception& e) {
        throw detail::OperatorFailure(std::string("reduce: ") + e.what(), index);
      } catch (...) {
        throw detail::OperatorFailure("reduce: unknown error", index);
      }
      ++index;
    });
    next(acc);
  });
}

}  // namespace sealflow::dataflow
