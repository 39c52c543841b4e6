"""Compiled Gibbs sweep kernels.

Every kernel mutates the count arrays in place and consumes pre-drawn
uniforms, so the numpy backend in ``_numpy.py`` follows the exact same
trajectory given the same draws.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def _pick(cum, total, u):
    r = u * total
    T = cum.shape[0]
    for t in range(T):
        if cum[t] > r:
            return t
    return T - 1


@njit(cache=True, nogil=True)
def lda_sweep(doc_ptr, words, z, s, n_tw, n_t, n_dt, k_tw, k_t, k_dt,
              cate, alpha, beta, lam, latent, u_topic, u_ind):
    T, V = n_tw.shape
    vbeta = V * beta
    D = doc_ptr.shape[0] - 1
    dirichlet = np.empty(T)
    cum = np.empty(T)
    for d in range(D):
        for i in range(doc_ptr[d], doc_ptr[d + 1]):
            w = words[i]
            t = z[i]
            if s[i] == 1:
                k_tw[t, w] -= 1
                k_t[t] -= 1
                k_dt[d, t] -= 1
            else:
                n_tw[t, w] -= 1
                n_t[t] -= 1
                n_dt[d, t] -= 1

            total = 0.0
            for t in range(T):
                dirichlet[t] = (n_tw[t, w] + beta) / (n_t[t] + vbeta)
                if latent:
                    word_term = (1.0 - lam) * dirichlet[t] + lam * cate[t, w]
                else:
                    word_term = dirichlet[t]
                total += (n_dt[d, t] + k_dt[d, t] + alpha) * word_term
                cum[t] = total
            if total > 0.0:
                t = _pick(cum, total, u_topic[i])
            else:
                t = min(int(u_topic[i] * T), T - 1)
            z[i] = t

            new_s = 0
            if latent:
                p1 = lam * cate[t, w]
                norm = (1.0 - lam) * dirichlet[t] + p1
                if norm > 0.0:
                    if u_ind[i] * norm < p1:
                        new_s = 1
                elif u_ind[i] < lam:
                    new_s = 1
            s[i] = new_s
            if new_s == 1:
                k_tw[t, w] += 1
                k_t[t] += 1
                k_dt[d, t] += 1
            else:
                n_tw[t, w] += 1
                n_t[t] += 1
                n_dt[d, t] += 1


@njit(cache=True, nogil=True)
def _softmax_pick(logw, u):
    T = logw.shape[0]
    top = logw[0]
    for t in range(1, T):
        if logw[t] > top:
            top = logw[t]
    cum = np.empty(T)
    total = 0.0
    for t in range(T):
        total += math.exp(logw[t] - top)
        cum[t] = total
    return _pick(cum, total, u)


@njit(cache=True, nogil=True)
def dmm_sweep(doc_ptr, words, uniq_ptr, uniq_words, uniq_counts, z, n_tw,
              n_t, n_dt, m_t, alpha, beta, u_topic):
    T, V = n_tw.shape
    vbeta = V * beta
    D = doc_ptr.shape[0] - 1
    logw = np.empty(T)
    for d in range(D):
        nd = doc_ptr[d + 1] - doc_ptr[d]
        t = z[d]
        m_t[t] -= 1
        n_t[t] -= nd
        n_dt[d, t] -= nd
        for j in range(uniq_ptr[d], uniq_ptr[d + 1]):
            n_tw[t, uniq_words[j]] -= uniq_counts[j]

        for t in range(T):
            acc = (math.log(m_t[t] + alpha) + math.lgamma(n_t[t] + vbeta)
                   - math.lgamma(n_t[t] + nd + vbeta))
            for j in range(uniq_ptr[d], uniq_ptr[d + 1]):
                base = n_tw[t, uniq_words[j]] + beta
                acc += math.lgamma(base + uniq_counts[j]) - math.lgamma(base)
            logw[t] = acc
        t = _softmax_pick(logw, u_topic[d])

        z[d] = t
        m_t[t] += 1
        n_t[t] += nd
        n_dt[d, t] += nd
        for j in range(uniq_ptr[d], uniq_ptr[d + 1]):
            n_tw[t, uniq_words[j]] += uniq_counts[j]


@njit(cache=True, nogil=True)
def _log_mix(lam, dirichlet, cate_p):
    # log((1 - lam) * dirichlet + lam * cate_p), exact at lam in {0, 1}
    if lam == 0.0:
        return math.log(dirichlet)
    if lam == 1.0:
        if cate_p > 0.0:
            return math.log(cate_p)
        return -np.inf
    return math.log((1.0 - lam) * dirichlet + lam * cate_p)


@njit(cache=True, nogil=True)
def lfdmm_sweep(doc_ptr, words, z, s, n_tw, n_t, n_dt, k_tw, k_t, k_dt, m_t,
                cate, alpha, beta, lam, u_topic, u_ind):
    T, V = n_tw.shape
    vbeta = V * beta
    D = doc_ptr.shape[0] - 1
    logw = np.empty(T)
    for d in range(D):
        t = z[d]
        m_t[t] -= 1
        for i in range(doc_ptr[d], doc_ptr[d + 1]):
            w = words[i]
            if s[i] == 1:
                k_tw[t, w] -= 1
                k_t[t] -= 1
                k_dt[d, t] -= 1
            else:
                n_tw[t, w] -= 1
                n_t[t] -= 1
                n_dt[d, t] -= 1

        finite = False
        for t in range(T):
            acc = math.log(m_t[t] + alpha)
            denom = n_t[t] + vbeta
            for i in range(doc_ptr[d], doc_ptr[d + 1]):
                w = words[i]
                acc += _log_mix(lam, (n_tw[t, w] + beta) / denom, cate[t, w])
            logw[t] = acc
            if acc > -np.inf:
                finite = True
        if finite:
            t = _softmax_pick(logw, u_topic[d])
        else:
            t = min(int(u_topic[d] * T), T - 1)
        z[d] = t

        # indicators use the frozen counts with document d still removed
        denom = n_t[t] + vbeta
        for i in range(doc_ptr[d], doc_ptr[d + 1]):
            w = words[i]
            p1 = lam * cate[t, w]
            norm = (1.0 - lam) * ((n_tw[t, w] + beta) / denom) + p1
            if norm > 0.0:
                s[i] = 1 if u_ind[i] * norm < p1 else 0
            else:
                s[i] = 1 if u_ind[i] < lam else 0
        m_t[t] += 1
        for i in range(doc_ptr[d], doc_ptr[d + 1]):
            w = words[i]
            if s[i] == 1:
                k_tw[t, w] += 1
                k_t[t] += 1
                k_dt[d, t] += 1
            else:
                n_tw[t, w] += 1
                n_t[t] += 1
                n_dt[d, t] += 1
