/*
 * LD_PRELOAD tracer for the socket API.
 *
 * Records 40 libc entry points as JSON lines (one object per call) into
 * $SOCKSCOPE_OUT/events.<pid>.jsonl, plus a meta.json sidecar written
 * once per trace directory.  IP addresses are anonymized in-process with
 * a salted SHA-1 before anything is written, so raw remote addresses
 * never reach disk; loopback and link-local addresses are left as-is.
 *
 * Design constraints:
 *   - transparent: every call forwards to the real function first and
 *     returns its result unchanged; errno is saved around recording.
 *   - cheap: events accumulate in a per-thread buffer and are flushed
 *     with a single O_APPEND write per batch (whole lines only).
 *   - durable: buffers are flushed on close/shutdown events, at fork,
 *     on thread exit and at process exit, so a killed process loses at
 *     most the tail after its last close.
 *   - quiet: only descriptors created by socket/socketpair/accept/dup
 *     of a traced socket are recorded; the tracer's own file I/O and
 *     its startup queries are never traced (reentrancy guard).
 *
 * Environment:
 *   SOCKSCOPE_OUT     output directory (tracing disabled when unset)
 *   SOCKSCOPE_SALT    64 hex chars = 32-byte salt (generated if absent)
 *   SOCKSCOPE_OPTOUT  when set: no kernel/netcfg in meta.json
 */
#ifndef _GNU_SOURCE
#define _GNU_SOURCE
#endif

#include <arpa/inet.h>
#include <dlfcn.h>
#include <errno.h>
#include <fcntl.h>
#include <ifaddrs.h>
#include <limits.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <pthread.h>
#include <stdarg.h>
#include <stdint.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>
#include <sys/epoll.h>
#include <sys/ioctl.h>
#include <sys/mman.h>
#include <sys/random.h>
#include <sys/select.h>
#include <sys/sendfile.h>
#include <sys/socket.h>
#include <sys/stat.h>
#include <sys/syscall.h>
#include <sys/time.h>
#include <sys/types.h>
#include <sys/uio.h>
#include <sys/un.h>
#include <sys/utsname.h>
#include <time.h>
#include <unistd.h>

#ifndef SIOCGIWNAME
#define SIOCGIWNAME 0x8B01 /* wireless-extensions probe */
#endif

#define TRACER_VERSION "0.1.0"
#define SALT_LEN 32
#define FD_TABLE_SIZE 65536
#define TBUF_CAP 65536
#define LINE_CAP 1536
#define OUT_FD_FLOOR 800

/* ------------------------------------------------------------------ */
/* real functions                                                      */
/* ------------------------------------------------------------------ */

#define REAL_LIST(X)                                                        \
    X(socket, int, (int, int, int))                                         \
    X(socketpair, int, (int, int, int, int *))                              \
    X(bind, int, (int, const struct sockaddr *, socklen_t))                 \
    X(connect, int, (int, const struct sockaddr *, socklen_t))              \
    X(listen, int, (int, int))                                              \
    X(accept, int, (int, struct sockaddr *, socklen_t *))                   \
    X(accept4, int, (int, struct sockaddr *, socklen_t *, int))             \
    X(getsockname, int, (int, struct sockaddr *, socklen_t *))              \
    X(getpeername, int, (int, struct sockaddr *, socklen_t *))              \
    X(shutdown, int, (int, int))                                            \
    X(close, int, (int))                                                    \
    X(dup, int, (int))                                                      \
    X(dup2, int, (int, int))                                                \
    X(dup3, int, (int, int, int))                                           \
    X(send, ssize_t, (int, const void *, size_t, int))                      \
    X(sendto, ssize_t,                                                      \
      (int, const void *, size_t, int, const struct sockaddr *, socklen_t)) \
    X(sendmsg, ssize_t, (int, const struct msghdr *, int))                  \
    X(sendmmsg, int, (int, struct mmsghdr *, unsigned int, int))            \
    X(sendfile, ssize_t, (int, int, off_t *, size_t))                       \
    X(write, ssize_t, (int, const void *, size_t))                          \
    X(writev, ssize_t, (int, const struct iovec *, int))                    \
    X(recv, ssize_t, (int, void *, size_t, int))                            \
    X(recvfrom, ssize_t,                                                    \
      (int, void *, size_t, int, struct sockaddr *, socklen_t *))           \
    X(recvmsg, ssize_t, (int, struct msghdr *, int))                        \
    X(recvmmsg, int,                                                        \
      (int, struct mmsghdr *, unsigned int, int, struct timespec *))        \
    X(read, ssize_t, (int, void *, size_t))                                 \
    X(readv, ssize_t, (int, const struct iovec *, int))                     \
    X(getsockopt, int, (int, int, int, void *, socklen_t *))                \
    X(setsockopt, int, (int, int, int, const void *, socklen_t))            \
    X(fcntl, int, (int, int, ...))                                          \
    X(ioctl, int, (int, unsigned long, ...))                                \
    X(poll, int, (struct pollfd *, nfds_t, int))                            \
    X(ppoll, int,                                                           \
      (struct pollfd *, nfds_t, const struct timespec *, const sigset_t *)) \
    X(select, int, (int, fd_set *, fd_set *, fd_set *, struct timeval *))   \
    X(pselect, int,                                                         \
      (int, fd_set *, fd_set *, fd_set *, const struct timespec *,          \
       const sigset_t *))                                                   \
    X(epoll_create, int, (int))                                             \
    X(epoll_create1, int, (int))                                            \
    X(epoll_ctl, int, (int, int, int, struct epoll_event *))                \
    X(epoll_wait, int, (int, struct epoll_event *, int, int))               \
    X(epoll_pwait, int,                                                     \
      (int, struct epoll_event *, int, int, const sigset_t *))

#define DECLARE_REAL(name, ret, params) static ret(*real_##name) params;
REAL_LIST(DECLARE_REAL)
#undef DECLARE_REAL

#define LOAD(name)                                                       \
    do {                                                                 \
        if (!real_##name)                                                \
            real_##name = (__typeof__(real_##name))(uintptr_t)dlsym(     \
                RTLD_NEXT, #name);                                       \
    } while (0)

static void resolve_all(void)
{
#define RESOLVE_ONE(name, ret, params) LOAD(name);
    REAL_LIST(RESOLVE_ONE)
#undef RESOLVE_ONE
}

/* ------------------------------------------------------------------ */
/* global state                                                        */
/* ------------------------------------------------------------------ */

static int g_enabled;                    /* recording active          */
static char g_outdir[PATH_MAX];
static int g_out_fd = -1;
static pid_t g_pid;
static uint64_t g_t0_us;                 /* monotonic trace origin    */
static unsigned char g_salt[SALT_LEN];
static char g_salt_fp[9];
static int g_optout;
static volatile uint64_t g_dropped;

static __thread int t_guard;             /* reentrancy depth          */
static __thread pid_t t_tid;

/* per-fd flags */
#define FDF_SOCKET 1u
#define FDF_EPOLL 2u
#define FDF_EPOLL_HOT 4u /* epoll instance watching >=1 traced socket */
static volatile unsigned char g_fdtab[FD_TABLE_SIZE];

static unsigned char fd_flags(int fd)
{
    if (fd < 0 || fd >= FD_TABLE_SIZE)
        return 0;
    return __atomic_load_n(&g_fdtab[fd], __ATOMIC_RELAXED);
}

static void fd_set_flags(int fd, unsigned char flags)
{
    if (fd >= 0 && fd < FD_TABLE_SIZE)
        __atomic_store_n(&g_fdtab[fd], flags, __ATOMIC_RELAXED);
}

static void fd_or_flags(int fd, unsigned char flags)
{
    if (fd >= 0 && fd < FD_TABLE_SIZE)
        __atomic_or_fetch(&g_fdtab[fd], flags, __ATOMIC_RELAXED);
}

static int fd_is_socket(int fd) { return (fd_flags(fd) & FDF_SOCKET) != 0; }

/* ------------------------------------------------------------------ */
/* time and identity                                                   */
/* ------------------------------------------------------------------ */

static uint64_t mono_us(void)
{
    struct timespec ts;
    clock_gettime(CLOCK_MONOTONIC, &ts);
    return (uint64_t)ts.tv_sec * 1000000u + (uint64_t)(ts.tv_nsec / 1000);
}

static int64_t rel_us(void) { return (int64_t)(mono_us() - g_t0_us); }

static pid_t my_tid(void)
{
    if (!t_tid)
        t_tid = (pid_t)syscall(SYS_gettid);
    return t_tid;
}

/* ------------------------------------------------------------------ */
/* SHA-1 (for in-process address anonymization)                        */
/* ------------------------------------------------------------------ */

static uint32_t sha1_rol(uint32_t v, int s) { return (v << s) | (v >> (32 - s)); }

static void sha1_block(uint32_t h[5], const unsigned char p[64])
{
    uint32_t w[80];
    int t;
    for (t = 0; t < 16; t++)
        w[t] = ((uint32_t)p[4 * t] << 24) | ((uint32_t)p[4 * t + 1] << 16) |
               ((uint32_t)p[4 * t + 2] << 8) | (uint32_t)p[4 * t + 3];
    for (t = 16; t < 80; t++)
        w[t] = sha1_rol(w[t - 3] ^ w[t - 8] ^ w[t - 14] ^ w[t - 16], 1);
    uint32_t a = h[0], b = h[1], c = h[2], d = h[3], e = h[4];
    for (t = 0; t < 80; t++) {
        uint32_t f, k;
        if (t < 20) {
            f = (b & c) | ((~b) & d);
            k = 0x5A827999;
        } else if (t < 40) {
            f = b ^ c ^ d;
            k = 0x6ED9EBA1;
        } else if (t < 60) {
            f = (b & c) | (b & d) | (c & d);
            k = 0x8F1BBCDC;
        } else {
            f = b ^ c ^ d;
            k = 0xCA62C1D6;
        }
        uint32_t tmp = sha1_rol(a, 5) + f + e + k + w[t];
        e = d;
        d = c;
        c = sha1_rol(b, 30);
        b = a;
        a = tmp;
    }
    h[0] += a;
    h[1] += b;
    h[2] += c;
    h[3] += d;
    h[4] += e;
}

static void sha1(const unsigned char *msg, size_t len, unsigned char out[20])
{
    uint32_t h[5] = {0x67452301u, 0xEFCDAB89u, 0x98BADCFEu, 0x10325476u,
                     0xC3D2E1F0u};
    size_t i = 0;
    for (; i + 64 <= len; i += 64)
        sha1_block(h, msg + i);
    unsigned char tail[128];
    size_t rem = len - i;
    memset(tail, 0, sizeof(tail));
    memcpy(tail, msg + i, rem);
    tail[rem] = 0x80;
    size_t blocks = (rem + 1 + 8 <= 64) ? 1 : 2;
    uint64_t bits = (uint64_t)len * 8;
    int k;
    for (k = 0; k < 8; k++)
        tail[blocks * 64 - 1 - (size_t)k] = (unsigned char)(bits >> (8 * k));
    sha1_block(h, tail);
    if (blocks == 2)
        sha1_block(h, tail + 64);
    for (k = 0; k < 5; k++) {
        out[4 * k] = (unsigned char)(h[k] >> 24);
        out[4 * k + 1] = (unsigned char)(h[k] >> 16);
        out[4 * k + 2] = (unsigned char)(h[k] >> 8);
        out[4 * k + 3] = (unsigned char)h[k];
    }
}

/*
 * Replace the address bits with the low-order bits of
 * SHA-1(salt || address-bytes).  Loopback and link-local addresses are
 * the only fixed points; a v4-mapped v6 address is judged by its
 * embedded v4 but hashed as the full 16 bytes.
 */
static void anon_ip(unsigned char *bytes, size_t n)
{
    if (n == 4) {
        if (bytes[0] == 127 || (bytes[0] == 169 && bytes[1] == 254))
            return;
    } else {
        static const unsigned char v4map[12] = {0, 0, 0, 0, 0, 0,
                                                0, 0, 0, 0, 0xff, 0xff};
        if (memcmp(bytes, v4map, 12) == 0) {
            if (bytes[12] == 127 || (bytes[12] == 169 && bytes[13] == 254))
                return;
        } else {
            static const unsigned char loop6[16] = {0, 0, 0, 0, 0, 0, 0, 0,
                                                    0, 0, 0, 0, 0, 0, 0, 1};
            if (memcmp(bytes, loop6, 16) == 0)
                return;
            if (bytes[0] == 0xfe && (bytes[1] & 0xc0) == 0x80)
                return;
        }
    }
    unsigned char msg[SALT_LEN + 16];
    unsigned char digest[20];
    memcpy(msg, g_salt, SALT_LEN);
    memcpy(msg + SALT_LEN, bytes, n);
    sha1(msg, SALT_LEN + n, digest);
    memcpy(bytes, digest + (20 - n), n);
}

/* ------------------------------------------------------------------ */
/* bounded string builder (no allocation)                              */
/* ------------------------------------------------------------------ */

typedef struct {
    char *buf;
    size_t len;
    size_t cap;
    int overflow;
} sb;

static void sb_init(sb *b, char *storage, size_t cap)
{
    b->buf = storage;
    b->len = 0;
    b->cap = cap;
    b->overflow = 0;
}

static void sb_putc(sb *b, char c)
{
    if (b->len + 1 >= b->cap) {
        b->overflow = 1;
        return;
    }
    b->buf[b->len++] = c;
}

static void sb_puts(sb *b, const char *s)
{
    while (*s)
        sb_putc(b, *s++);
}

static void sb_i64(sb *b, long long v)
{
    char tmp[24];
    int n = snprintf(tmp, sizeof(tmp), "%lld", v);
    if (n > 0)
        sb_puts(b, tmp);
}

static void sb_u64(sb *b, unsigned long long v)
{
    char tmp[24];
    int n = snprintf(tmp, sizeof(tmp), "%llu", v);
    if (n > 0)
        sb_puts(b, tmp);
}

/* JSON string literal, escaped */
static void sb_jstr(sb *b, const char *s)
{
    sb_putc(b, '"');
    for (; *s; s++) {
        unsigned char c = (unsigned char)*s;
        if (c == '"' || c == '\\') {
            sb_putc(b, '\\');
            sb_putc(b, (char)c);
        } else if (c < 0x20) {
            char tmp[8];
            snprintf(tmp, sizeof(tmp), "\\u%04x", c);
            sb_puts(b, tmp);
        } else {
            sb_putc(b, (char)c);
        }
    }
    sb_putc(b, '"');
}

/* ------------------------------------------------------------------ */
/* per-thread event buffers                                            */
/* ------------------------------------------------------------------ */

typedef struct tbuf {
    struct tbuf *next;
    pthread_mutex_t mu;
    size_t len;
    char data[TBUF_CAP];
} tbuf;

static tbuf *g_reg;
static pthread_mutex_t g_reg_mu = PTHREAD_MUTEX_INITIALIZER;
static pthread_key_t g_tbuf_key;
static int g_tbuf_key_ok;
static __thread tbuf *t_buf;

static void raw_out(const char *p, size_t n)
{
    while (n > 0) {
        ssize_t w = syscall(SYS_write, g_out_fd, p, n);
        if (w <= 0) {
            if (w < 0 && errno == EINTR)
                continue;
            __atomic_add_fetch(&g_dropped, 1, __ATOMIC_RELAXED);
            return;
        }
        p += w;
        n -= (size_t)w;
    }
}

static void tbuf_flush_locked(tbuf *t)
{
    if (t->len == 0 || g_out_fd < 0)
        return;
    raw_out(t->data, t->len);
    t->len = 0;
}

static void tbuf_destructor(void *arg)
{
    tbuf *t = (tbuf *)arg;
    if (!t)
        return;
    pthread_mutex_lock(&t->mu);
    tbuf_flush_locked(t);
    pthread_mutex_unlock(&t->mu);
    pthread_mutex_lock(&g_reg_mu);
    tbuf **pp = &g_reg;
    while (*pp && *pp != t)
        pp = &(*pp)->next;
    if (*pp)
        *pp = t->next;
    pthread_mutex_unlock(&g_reg_mu);
    t_buf = NULL;
    munmap(t, sizeof(tbuf));
}

static tbuf *get_tbuf(void)
{
    if (t_buf)
        return t_buf;
    void *mem = mmap(NULL, sizeof(tbuf), PROT_READ | PROT_WRITE,
                     MAP_PRIVATE | MAP_ANONYMOUS, -1, 0);
    if (mem == MAP_FAILED)
        return NULL;
    tbuf *t = (tbuf *)mem;
    t->len = 0;
    pthread_mutex_init(&t->mu, NULL);
    pthread_mutex_lock(&g_reg_mu);
    t->next = g_reg;
    g_reg = t;
    pthread_mutex_unlock(&g_reg_mu);
    if (g_tbuf_key_ok)
        pthread_setspecific(g_tbuf_key, t);
    t_buf = t;
    return t;
}

static void flush_all(void)
{
    pthread_mutex_lock(&g_reg_mu);
    tbuf *t;
    for (t = g_reg; t; t = t->next) {
        pthread_mutex_lock(&t->mu);
        tbuf_flush_locked(t);
        pthread_mutex_unlock(&t->mu);
    }
    pthread_mutex_unlock(&g_reg_mu);
}

/* append one whole line; optionally force it to disk right away */
static void emit_line(sb *b, int flush_now)
{
    if (b->overflow) {
        __atomic_add_fetch(&g_dropped, 1, __ATOMIC_RELAXED);
        return;
    }
    tbuf *t = get_tbuf();
    if (!t) {
        __atomic_add_fetch(&g_dropped, 1, __ATOMIC_RELAXED);
        return;
    }
    pthread_mutex_lock(&t->mu);
    if (t->len + b->len > TBUF_CAP)
        tbuf_flush_locked(t);
    if (b->len > TBUF_CAP) {
        __atomic_add_fetch(&g_dropped, 1, __ATOMIC_RELAXED);
    } else {
        memcpy(t->data + t->len, b->buf, b->len);
        t->len += b->len;
        if (flush_now)
            tbuf_flush_locked(t);
    }
    pthread_mutex_unlock(&t->mu);
}

/* ------------------------------------------------------------------ */
/* name tables                                                         */
/* ------------------------------------------------------------------ */

static const char *domain_name(int domain, char *tmp, size_t cap)
{
    switch (domain) {
    case AF_UNSPEC:
        return "unspec";
    case AF_UNIX:
        return "unix";
    case AF_INET:
        return "inet";
    case AF_INET6:
        return "inet6";
    case AF_NETLINK:
        return "netlink";
    case AF_PACKET:
        return "packet";
    default:
        snprintf(tmp, cap, "af_%d", domain);
        return tmp;
    }
}

static const char *type_name(int type, char *tmp, size_t cap)
{
    switch (type & 0xff) {
    case SOCK_STREAM:
        return "stream";
    case SOCK_DGRAM:
        return "dgram";
    case SOCK_RAW:
        return "raw";
    case SOCK_RDM:
        return "rdm";
    case SOCK_SEQPACKET:
        return "seqpacket";
    case SOCK_DCCP:
        return "dccp";
    default:
        snprintf(tmp, cap, "type_%d", type & 0xff);
        return tmp;
    }
}

static void put_sock_type_flags(sb *b, int type)
{
    int wrote = 0;
    if (type & SOCK_NONBLOCK) {
        sb_puts(b, ",\"flags\":[\"SOCK_NONBLOCK\"");
        wrote = 1;
    }
    if (type & SOCK_CLOEXEC) {
        sb_puts(b, wrote ? ",\"SOCK_CLOEXEC\"" : ",\"flags\":[\"SOCK_CLOEXEC\"");
        wrote = 1;
    }
    if (wrote)
        sb_putc(b, ']');
}

struct flag_name {
    int value;
    const char *name;
};

static const struct flag_name MSG_FLAGS[] = {
    {MSG_NOSIGNAL, "MSG_NOSIGNAL"}, {MSG_DONTWAIT, "MSG_DONTWAIT"},
    {MSG_MORE, "MSG_MORE"},         {MSG_PEEK, "MSG_PEEK"},
    {MSG_WAITALL, "MSG_WAITALL"},   {MSG_OOB, "MSG_OOB"},
    {MSG_EOR, "MSG_EOR"},           {MSG_TRUNC, "MSG_TRUNC"},
    {MSG_CTRUNC, "MSG_CTRUNC"},     {MSG_CONFIRM, "MSG_CONFIRM"},
    {MSG_ERRQUEUE, "MSG_ERRQUEUE"}, {MSG_CMSG_CLOEXEC, "MSG_CMSG_CLOEXEC"},
    {MSG_FASTOPEN, "MSG_FASTOPEN"}, {0, NULL},
};

static const struct flag_name FILE_FLAGS[] = {
    {O_NONBLOCK, "O_NONBLOCK"}, {O_APPEND, "O_APPEND"},
    {O_ASYNC, "O_ASYNC"},       {O_DIRECT, "O_DIRECT"},
    {O_NOATIME, "O_NOATIME"},   {0, NULL},
};

static void put_flag_list(sb *b, const char *key, const struct flag_name *tab,
                          int value)
{
    if (value == 0)
        return;
    sb_putc(b, ',');
    sb_jstr(b, key);
    sb_puts(b, ":[");
    int wrote = 0;
    int covered = 0;
    const struct flag_name *f;
    for (f = tab; f->name; f++) {
        if (value & f->value) {
            if (wrote)
                sb_putc(b, ',');
            sb_jstr(b, f->name);
            wrote = 1;
            covered |= f->value;
        }
    }
    int rest = value & ~covered;
    if (rest) {
        char tmp[24];
        snprintf(tmp, sizeof(tmp), "FLAG_0x%x", (unsigned)rest);
        if (wrote)
            sb_putc(b, ',');
        sb_jstr(b, tmp);
    }
    sb_putc(b, ']');
}

static const char *level_name(int level, char *tmp, size_t cap)
{
    switch (level) {
    case SOL_SOCKET:
        return "SOL_SOCKET";
    case IPPROTO_TCP:
        return "IPPROTO_TCP";
    case IPPROTO_UDP:
        return "IPPROTO_UDP";
    case IPPROTO_IP:
        return "IPPROTO_IP";
    case IPPROTO_IPV6:
        return "IPPROTO_IPV6";
    default:
        snprintf(tmp, cap, "level_%d", level);
        return tmp;
    }
}

static const struct flag_name SOL_SOCKET_OPTS[] = {
    {SO_DEBUG, "SO_DEBUG"},
    {SO_REUSEADDR, "SO_REUSEADDR"},
    {SO_REUSEPORT, "SO_REUSEPORT"},
    {SO_TYPE, "SO_TYPE"},
    {SO_ERROR, "SO_ERROR"},
    {SO_DONTROUTE, "SO_DONTROUTE"},
    {SO_BROADCAST, "SO_BROADCAST"},
    {SO_SNDBUF, "SO_SNDBUF"},
    {SO_RCVBUF, "SO_RCVBUF"},
    {SO_KEEPALIVE, "SO_KEEPALIVE"},
    {SO_OOBINLINE, "SO_OOBINLINE"},
    {SO_LINGER, "SO_LINGER"},
    {SO_RCVLOWAT, "SO_RCVLOWAT"},
    {SO_SNDLOWAT, "SO_SNDLOWAT"},
    {SO_RCVTIMEO, "SO_RCVTIMEO"},
    {SO_SNDTIMEO, "SO_SNDTIMEO"},
    {SO_ACCEPTCONN, "SO_ACCEPTCONN"},
    {SO_PRIORITY, "SO_PRIORITY"},
    {SO_BINDTODEVICE, "SO_BINDTODEVICE"},
    {SO_TIMESTAMP, "SO_TIMESTAMP"},
    {0, NULL},
};

static const struct flag_name TCP_OPTS[] = {
    {TCP_NODELAY, "TCP_NODELAY"},
    {TCP_MAXSEG, "TCP_MAXSEG"},
    {TCP_CORK, "TCP_CORK"},
    {TCP_KEEPIDLE, "TCP_KEEPIDLE"},
    {TCP_KEEPINTVL, "TCP_KEEPINTVL"},
    {TCP_KEEPCNT, "TCP_KEEPCNT"},
    {TCP_INFO, "TCP_INFO"},
    {TCP_QUICKACK, "TCP_QUICKACK"},
    {TCP_CONGESTION, "TCP_CONGESTION"},
    {TCP_USER_TIMEOUT, "TCP_USER_TIMEOUT"},
    {TCP_DEFER_ACCEPT, "TCP_DEFER_ACCEPT"},
    {TCP_FASTOPEN, "TCP_FASTOPEN"},
    {0, NULL},
};

static const struct flag_name IP_OPTS[] = {
    {IP_TOS, "IP_TOS"},
    {IP_TTL, "IP_TTL"},
    {IP_HDRINCL, "IP_HDRINCL"},
    {IP_OPTIONS, "IP_OPTIONS"},
    {IP_PKTINFO, "IP_PKTINFO"},
    {IP_RECVERR, "IP_RECVERR"},
    {IP_MTU_DISCOVER, "IP_MTU_DISCOVER"},
    {IP_MTU, "IP_MTU"},
    {IP_FREEBIND, "IP_FREEBIND"},
    {IP_MULTICAST_IF, "IP_MULTICAST_IF"},
    {IP_MULTICAST_TTL, "IP_MULTICAST_TTL"},
    {IP_MULTICAST_LOOP, "IP_MULTICAST_LOOP"},
    {IP_ADD_MEMBERSHIP, "IP_ADD_MEMBERSHIP"},
    {IP_DROP_MEMBERSHIP, "IP_DROP_MEMBERSHIP"},
    {IP_ADD_SOURCE_MEMBERSHIP, "IP_ADD_SOURCE_MEMBERSHIP"},
    {IP_DROP_SOURCE_MEMBERSHIP, "IP_DROP_SOURCE_MEMBERSHIP"},
    {0, NULL},
};

static const struct flag_name IPV6_OPTS[] = {
    {IPV6_V6ONLY, "IPV6_V6ONLY"},
    {IPV6_TCLASS, "IPV6_TCLASS"},
    {IPV6_UNICAST_HOPS, "IPV6_UNICAST_HOPS"},
    {IPV6_MULTICAST_HOPS, "IPV6_MULTICAST_HOPS"},
    {IPV6_MULTICAST_LOOP, "IPV6_MULTICAST_LOOP"},
    {IPV6_MULTICAST_IF, "IPV6_MULTICAST_IF"},
    {IPV6_JOIN_GROUP, "IPV6_JOIN_GROUP"},
    {IPV6_LEAVE_GROUP, "IPV6_LEAVE_GROUP"},
    {IPV6_RECVPKTINFO, "IPV6_RECVPKTINFO"},
    {IPV6_MTU, "IPV6_MTU"},
    {0, NULL},
};

static const char *optname_name(int level, int optname, char *tmp, size_t cap)
{
    const struct flag_name *tab = NULL;
    switch (level) {
    case SOL_SOCKET:
        tab = SOL_SOCKET_OPTS;
        break;
    case IPPROTO_TCP:
        tab = TCP_OPTS;
        break;
    case IPPROTO_IP:
        tab = IP_OPTS;
        break;
    case IPPROTO_IPV6:
        tab = IPV6_OPTS;
        break;
    default:
        tab = NULL;
    }
    if (tab) {
        const struct flag_name *f;
        for (f = tab; f->name; f++)
            if (f->value == optname)
                return f->name;
    }
    snprintf(tmp, cap, "opt_%d", optname);
    return tmp;
}

static const char *ioctl_name(unsigned long request, char *tmp, size_t cap)
{
    switch (request) {
    case SIOCGIFADDR:
        return "SIOCGIFADDR";
    case SIOCGIFNAME:
        return "SIOCGIFNAME";
    case SIOCGIFFLAGS:
        return "SIOCGIFFLAGS";
    case SIOCGIFNETMASK:
        return "SIOCGIFNETMASK";
    case SIOCGIFBRDADDR:
        return "SIOCGIFBRDADDR";
    case SIOCGIFCONF:
        return "SIOCGIFCONF";
    case SIOCGIFMTU:
        return "SIOCGIFMTU";
    case SIOCGIFHWADDR:
        return "SIOCGIFHWADDR";
    case SIOCGIFINDEX:
        return "SIOCGIFINDEX";
    case SIOCGIWNAME:
        return "SIOCGIWNAME";
    case FIONBIO:
        return "FIONBIO";
    case FIONREAD:
        return "FIONREAD";
    case SIOCATMARK:
        return "SIOCATMARK";
    default:
        snprintf(tmp, cap, "0x%lx", request);
        return tmp;
    }
}

static const char *fcntl_name(int cmd, char *tmp, size_t cap)
{
    switch (cmd) {
    case F_GETFL:
        return "F_GETFL";
    case F_SETFL:
        return "F_SETFL";
    case F_GETFD:
        return "F_GETFD";
    case F_SETFD:
        return "F_SETFD";
    case F_DUPFD:
        return "F_DUPFD";
    case F_DUPFD_CLOEXEC:
        return "F_DUPFD_CLOEXEC";
    case F_GETOWN:
        return "F_GETOWN";
    case F_SETOWN:
        return "F_SETOWN";
    case F_GETLK:
        return "F_GETLK";
    case F_SETLK:
        return "F_SETLK";
    case F_SETLKW:
        return "F_SETLKW";
    default:
        snprintf(tmp, cap, "cmd_%d", cmd);
        return tmp;
    }
}

static const struct flag_name EPOLL_EVENT_NAMES[] = {
    {EPOLLIN, "EPOLLIN"},       {EPOLLOUT, "EPOLLOUT"},
    {EPOLLERR, "EPOLLERR"},     {EPOLLHUP, "EPOLLHUP"},
    {EPOLLRDHUP, "EPOLLRDHUP"}, {EPOLLPRI, "EPOLLPRI"},
    {EPOLLONESHOT, "EPOLLONESHOT"},
    {0, NULL},
};

/* ------------------------------------------------------------------ */
/* address formatting                                                  */
/* ------------------------------------------------------------------ */

/* writes ,"addr":{...} (or nothing when sa is unusable) */
static void put_addr(sb *b, const struct sockaddr *sa, socklen_t len)
{
    if (!sa || len < (socklen_t)sizeof(sa_family_t))
        return;
    if (sa->sa_family == AF_INET && len >= (socklen_t)sizeof(struct sockaddr_in)) {
        const struct sockaddr_in *in = (const struct sockaddr_in *)sa;
        unsigned char bytes[4];
        memcpy(bytes, &in->sin_addr.s_addr, 4);
        anon_ip(bytes, 4);
        char text[INET_ADDRSTRLEN];
        if (!inet_ntop(AF_INET, bytes, text, sizeof(text)))
            return;
        sb_puts(b, ",\"addr\":{\"family\":\"ipv4\",\"addr\":");
        sb_jstr(b, text);
        sb_puts(b, ",\"port\":");
        sb_i64(b, (long long)ntohs(in->sin_port));
        sb_putc(b, '}');
        return;
    }
    if (sa->sa_family == AF_INET6 &&
        len >= (socklen_t)sizeof(struct sockaddr_in6)) {
        const struct sockaddr_in6 *in6 = (const struct sockaddr_in6 *)sa;
        unsigned char bytes[16];
        memcpy(bytes, in6->sin6_addr.s6_addr, 16);
        anon_ip(bytes, 16);
        char text[INET6_ADDRSTRLEN];
        if (!inet_ntop(AF_INET6, bytes, text, sizeof(text)))
            return;
        sb_puts(b, ",\"addr\":{\"family\":\"ipv6\",\"addr\":");
        sb_jstr(b, text);
        sb_puts(b, ",\"port\":");
        sb_i64(b, (long long)ntohs(in6->sin6_port));
        sb_putc(b, '}');
        return;
    }
    if (sa->sa_family == AF_UNIX) {
        /* the path stays private; only the family is recorded */
        sb_puts(b, ",\"addr\":{\"family\":\"unix\",\"addr\":\"\",\"port\":0}");
        return;
    }
    sb_puts(b, ",\"addr\":{\"family\":\"unspec\",\"addr\":\"\",\"port\":0}");
}

/* like put_addr, but degrades to an unspec placeholder instead of omitting
 * the key (bind/connect records always carry one) */
static void put_addr_required(sb *b, const struct sockaddr *sa, socklen_t len)
{
    size_t before = b->len;
    put_addr(b, sa, len);
    if (b->len == before)
        sb_puts(b, ",\"addr\":{\"family\":\"unspec\",\"addr\":\"\",\"port\":0}");
}

/* ------------------------------------------------------------------ */
/* record assembly                                                     */
/* ------------------------------------------------------------------ */

static void rec_begin(sb *b, char *storage, size_t cap, const char *fn)
{
    sb_init(b, storage, cap);
    sb_puts(b, "{\"ts\":");
    sb_i64(b, rel_us());
    sb_puts(b, ",\"tid\":");
    sb_i64(b, (long long)my_tid());
    sb_puts(b, ",\"fn\":\"");
    sb_puts(b, fn);
    sb_puts(b, "\",\"args\":{");
}

static void rec_end(sb *b, long long ret, int err, int flush_now)
{
    sb_puts(b, "},\"ret\":");
    sb_i64(b, ret);
    sb_puts(b, ",\"err\":");
    sb_i64(b, (long long)err);
    sb_puts(b, "}\n");
    emit_line(b, flush_now);
}

#define RECORDING_ACTIVE() (g_enabled && !t_guard)

#define ENTER_RECORD() (t_guard++)
#define LEAVE_RECORD() (t_guard--)

static int err_of(long long ret, int saved_errno)
{
    return ret < 0 ? saved_errno : 0;
}

/* ------------------------------------------------------------------ */
/* metadata                                                            */
/* ------------------------------------------------------------------ */

static void meta_netcfg(sb *b)
{
    struct ifaddrs *ifa0 = NULL;
    sb_puts(b, "ifaces=");
    int has4 = 0, has6 = 0;
    if (getifaddrs(&ifa0) == 0) {
        const char *seen[32];
        int nseen = 0;
        struct ifaddrs *ifa;
        int wrote = 0;
        for (ifa = ifa0; ifa; ifa = ifa->ifa_next) {
            if (!ifa->ifa_name)
                continue;
            int dup = 0, i;
            for (i = 0; i < nseen; i++)
                if (strcmp(seen[i], ifa->ifa_name) == 0)
                    dup = 1;
            if (!dup && nseen < 32) {
                seen[nseen++] = ifa->ifa_name;
                if (wrote)
                    sb_putc(b, ',');
                sb_puts(b, ifa->ifa_name);
                wrote = 1;
            }
            if (ifa->ifa_addr) {
                if (ifa->ifa_addr->sa_family == AF_INET)
                    has4 = 1;
                else if (ifa->ifa_addr->sa_family == AF_INET6)
                    has6 = 1;
            }
        }
        freeifaddrs(ifa0);
    }
    sb_puts(b, ";families=");
    if (has4)
        sb_puts(b, "ipv4");
    if (has6)
        sb_puts(b, has4 ? ",ipv6" : "ipv6");
}

static void write_meta(void)
{
    char path[PATH_MAX];
    if (snprintf(path, sizeof(path), "%s/meta.json", g_outdir) >=
        (int)sizeof(path))
        return;
    if (access(path, F_OK) == 0)
        return; /* an earlier process in this tree already wrote it */

    /* app + cmd from /proc/self/cmdline */
    char cmdline[4096];
    ssize_t n = 0;
    int cfd = open("/proc/self/cmdline", O_RDONLY | O_CLOEXEC);
    if (cfd >= 0) {
        n = syscall(SYS_read, cfd, cmdline, sizeof(cmdline) - 1);
        syscall(SYS_close, cfd);
    }
    if (n < 0)
        n = 0;
    cmdline[n] = '\0';
    const char *app = "unknown";
    if (n > 0) {
        const char *slash = strrchr(cmdline, '/');
        app = slash ? slash + 1 : cmdline;
    }
    char cmd[4096];
    size_t ci = 0;
    ssize_t i;
    for (i = 0; i < n && ci + 1 < sizeof(cmd); i++)
        cmd[ci++] = cmdline[i] ? cmdline[i] : ' ';
    while (ci > 0 && cmd[ci - 1] == ' ')
        ci--;
    cmd[ci] = '\0';

    struct utsname uts;
    memset(&uts, 0, sizeof(uts));
    uname(&uts);

    char stamp[40];
    struct timespec rt;
    clock_gettime(CLOCK_REALTIME, &rt);
    struct tm tm_utc;
    gmtime_r(&rt.tv_sec, &tm_utc);
    strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);

    static char storage[16384];
    sb b;
    sb_init(&b, storage, sizeof(storage));
    sb_puts(&b, "{\"app\":");
    sb_jstr(&b, app);
    sb_puts(&b, ",\"cmd\":");
    sb_jstr(&b, cmd[0] ? cmd : app);
    sb_puts(&b, ",\"os\":");
    sb_jstr(&b, uts.sysname[0] ? uts.sysname : "Linux");
    if (!g_optout) {
        sb_puts(&b, ",\"kernel\":");
        sb_jstr(&b, uts.release);
        char netcfg[2048];
        sb nb;
        sb_init(&nb, netcfg, sizeof(netcfg));
        meta_netcfg(&nb);
        netcfg[nb.len] = '\0';
        sb_puts(&b, ",\"netcfg\":");
        sb_jstr(&b, netcfg);
    }
    sb_puts(&b, ",\"tracer_version\":\"" TRACER_VERSION "\"");
    sb_puts(&b, ",\"started_at\":");
    sb_jstr(&b, stamp);
    sb_puts(&b, ",\"salt_fp\":");
    sb_jstr(&b, g_salt_fp);
    sb_puts(&b, ",\"opt_out\":");
    sb_puts(&b, g_optout ? "true" : "false");
    sb_puts(&b, "}\n");
    if (b.overflow)
        return;

    char tmp_path[PATH_MAX];
    if (snprintf(tmp_path, sizeof(tmp_path), "%s/meta.json.tmp.%d", g_outdir,
                 (int)g_pid) >= (int)sizeof(tmp_path))
        return;
    int fd = open(tmp_path, O_WRONLY | O_CREAT | O_EXCL | O_CLOEXEC, 0644);
    if (fd < 0)
        return;
    size_t off = 0;
    while (off < b.len) {
        ssize_t w = syscall(SYS_write, fd, storage + off, b.len - off);
        if (w <= 0)
            break;
        off += (size_t)w;
    }
    syscall(SYS_close, fd);
    if (off == b.len)
        rename(tmp_path, path);
    else
        unlink(tmp_path);
}

/* ------------------------------------------------------------------ */
/* init / teardown                                                     */
/* ------------------------------------------------------------------ */

static int open_events_file(void)
{
    char path[PATH_MAX];
    if (snprintf(path, sizeof(path), "%s/events.%d.jsonl", g_outdir,
                 (int)g_pid) >= (int)sizeof(path))
        return -1;
    int fd = open(path, O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd < 0)
        return -1;
    /* keep out of the target's usual descriptor range */
    int high = fcntl(fd, F_DUPFD_CLOEXEC, OUT_FD_FLOOR);
    if (high >= 0) {
        syscall(SYS_close, fd);
        return high;
    }
    return fd;
}

static int parse_salt_env(const char *hex)
{
    if (!hex || strlen(hex) != 2 * SALT_LEN)
        return -1;
    int i;
    for (i = 0; i < SALT_LEN; i++) {
        int hi, lo;
        char a = hex[2 * i], c = hex[2 * i + 1];
        if (a >= '0' && a <= '9')
            hi = a - '0';
        else if (a >= 'a' && a <= 'f')
            hi = a - 'a' + 10;
        else if (a >= 'A' && a <= 'F')
            hi = a - 'A' + 10;
        else
            return -1;
        if (c >= '0' && c <= '9')
            lo = c - '0';
        else if (c >= 'a' && c <= 'f')
            lo = c - 'a' + 10;
        else if (c >= 'A' && c <= 'F')
            lo = c - 'A' + 10;
        else
            return -1;
        g_salt[i] = (unsigned char)((hi << 4) | lo);
    }
    return 0;
}

static void random_salt(void)
{
    ssize_t got = getrandom(g_salt, SALT_LEN, 0);
    if (got != SALT_LEN) {
        int fd = open("/dev/urandom", O_RDONLY | O_CLOEXEC);
        size_t off = 0;
        if (fd >= 0) {
            while (off < SALT_LEN) {
                ssize_t r =
                    syscall(SYS_read, fd, g_salt + off, SALT_LEN - off);
                if (r <= 0)
                    break;
                off += (size_t)r;
            }
            syscall(SYS_close, fd);
        }
        if (off < SALT_LEN) {
            /* last resort: never leave the salt predictable-zero */
            uint64_t seed = mono_us() ^ ((uint64_t)getpid() << 32);
            size_t i;
            for (i = 0; i < SALT_LEN; i++) {
                seed = seed * 6364136223846793005ull + 1442695040888963407ull;
                g_salt[i] ^= (unsigned char)(seed >> 56);
            }
        }
    }
}

static void salt_fingerprint(void)
{
    unsigned char digest[20];
    sha1(g_salt, SALT_LEN, digest);
    static const char hexdig[] = "0123456789abcdef";
    int i;
    for (i = 0; i < 4; i++) {
        g_salt_fp[2 * i] = hexdig[digest[i] >> 4];
        g_salt_fp[2 * i + 1] = hexdig[digest[i] & 0xf];
    }
    g_salt_fp[8] = '\0';
}

static void fork_prepare(void) { flush_all(); }

static void fork_parent(void) {}

static void fork_child(void)
{
    t_tid = 0;
    pthread_mutex_init(&g_reg_mu, NULL);
    tbuf *mine = t_buf;
    g_reg = mine;
    if (mine) {
        mine->next = NULL;
        pthread_mutex_init(&mine->mu, NULL);
        mine->len = 0;
    }
    if (!g_enabled)
        return;
    t_guard++;
    g_pid = getpid();
    if (g_out_fd >= 0)
        syscall(SYS_close, g_out_fd);
    g_out_fd = open_events_file();
    if (g_out_fd < 0)
        g_enabled = 0;
    t_guard--;
}

static void tracer_shutdown(void)
{
    if (!g_enabled)
        return;
    flush_all();
    uint64_t dropped = __atomic_load_n(&g_dropped, __ATOMIC_RELAXED);
    if (dropped > 0) {
        char msg[128];
        int n = snprintf(msg, sizeof(msg),
                         "sockscope: %llu event(s) dropped\n",
                         (unsigned long long)dropped);
        if (n > 0)
            syscall(SYS_write, 2, msg, (size_t)n);
    }
}

__attribute__((constructor(101))) static void tracer_init(void)
{
    resolve_all();
    const char *out = getenv("SOCKSCOPE_OUT");
    if (!out || !*out)
        return; /* stay inert */
    if (strlen(out) >= sizeof(g_outdir))
        return;
    t_guard++;
    strcpy(g_outdir, out);
    g_pid = getpid();
    g_t0_us = mono_us();
    g_optout = getenv("SOCKSCOPE_OPTOUT") != NULL;
    if (parse_salt_env(getenv("SOCKSCOPE_SALT")) != 0)
        random_salt();
    salt_fingerprint();
    mkdir(g_outdir, 0755); /* EEXIST is fine */
    g_out_fd = open_events_file();
    if (g_out_fd < 0) {
        t_guard--;
        return;
    }
    if (pthread_key_create(&g_tbuf_key, tbuf_destructor) == 0)
        g_tbuf_key_ok = 1;
    pthread_atfork(fork_prepare, fork_parent, fork_child);
    atexit(tracer_shutdown);
    write_meta();
    g_enabled = 1;
    t_guard--;
}

__attribute__((destructor)) static void tracer_fini(void)
{
    tracer_shutdown();
    g_enabled = 0;
}

/* ------------------------------------------------------------------ */
/* recording helpers per argument family                               */
/* ------------------------------------------------------------------ */

static void record_io(const char *fn, int fd, unsigned long long bytes,
                      int flags, int have_flags, long long iov,
                      const struct sockaddr *sa, socklen_t salen,
                      long long ret, int err)
{
    char storage[LINE_CAP];
    sb b;
    rec_begin(&b, storage, sizeof(storage), fn);
    sb_puts(&b, "\"fd\":");
    sb_i64(&b, fd);
    sb_puts(&b, ",\"bytes\":");
    sb_u64(&b, bytes);
    if (have_flags)
        put_flag_list(&b, "flags", MSG_FLAGS, flags);
    if (iov >= 0) {
        sb_puts(&b, ",\"iov\":");
        sb_i64(&b, iov);
    }
    put_addr(&b, sa, salen);
    rec_end(&b, ret, err, 0);
}

static void record_addr_call(const char *fn, int fd,
                             const struct sockaddr *sa, socklen_t salen,
                             int a4flags, int addr_required, long long ret,
                             int err)
{
    char storage[LINE_CAP];
    sb b;
    rec_begin(&b, storage, sizeof(storage), fn);
    sb_puts(&b, "\"fd\":");
    sb_i64(&b, fd);
    if (addr_required)
        put_addr_required(&b, sa, salen);
    else
        put_addr(&b, sa, salen);
    if (a4flags)
        put_flag_list(&b, "flags", (const struct flag_name[]){
                                       {SOCK_NONBLOCK, "SOCK_NONBLOCK"},
                                       {SOCK_CLOEXEC, "SOCK_CLOEXEC"},
                                       {0, NULL},
                                   },
                      a4flags);
    rec_end(&b, ret, err, 0);
}

static unsigned long long iov_total(const struct iovec *iov, int cnt)
{
    unsigned long long total = 0;
    int i;
    if (!iov || cnt <= 0)
        return 0;
    for (i = 0; i < cnt; i++)
        total += (unsigned long long)iov[i].iov_len;
    return total;
}

/* ------------------------------------------------------------------ */
/* wrappers: creation                                                  */
/* ------------------------------------------------------------------ */

int socket(int domain, int type, int protocol)
{
    LOAD(socket);
    int ret = real_socket(domain, type, protocol);
    int e = errno;
    if (RECORDING_ACTIVE()) {
        ENTER_RECORD();
        if (ret >= 0)
            fd_set_flags(ret, FDF_SOCKET);
        char storage[LINE_CAP], tmp1[24], tmp2[24];
        sb b;
        rec_begin(&b, storage, sizeof(storage), "socket");
        sb_puts(&b, "\"domain\":");
        sb_jstr(&b, domain_name(domain, tmp1, sizeof(tmp1)));
        sb_puts(&b, ",\"type\":");
        sb_jstr(&b, type_name(type, tmp2, sizeof(tmp2)));
        sb_puts(&b, ",\"protocol\":");
        sb_i64(&b, protocol);
        put_sock_type_flags(&b, type);
        rec_end(&b, ret, err_of(ret, e), 0);
        LEAVE_RECORD();
    }
    errno = e;
    return ret;
}

int socketpair(int domain, int type, int protocol, int sv[2])
{
    LOAD(socketpair);
    int ret = real_socketpair(domain, type, protocol, sv);
    int e = errno;
    if (RECORDING_ACTIVE()) {
        ENTER_RECORD();
        if (ret == 0 && sv) {
            fd_set_flags(sv[0], FDF_SOCKET);
            fd_set_flags(sv[1], FDF_SOCKET);
        }
        char storage[LINE_CAP], tmp1[24], tmp2[24];
        sb b;
        rec_begin(&b, storage, sizeof(storage), "socketpair");
        sb_puts(&b, "\"domain\":");
        sb_jstr(&b, domain_name(domain, tmp1, sizeof(tmp1)));
        sb_puts(&b, ",\"type\":");
        sb_jstr(&b, type_name(type, tmp2, sizeof(tmp2)));
        sb_puts(&b, ",\"protocol\":");
        sb_i64(&b, protocol);
        put_sock_type_flags(&b, type);
        if (ret == 0 && sv) {
            sb_puts(&b, ",\"sv\":[");
            sb_i64(&b, sv[0]);
            sb_putc(&b, ',');
            sb_i64(&b, sv[1]);
            sb_putc(&b, ']');
        }
        rec_end(&b, ret, err_of(ret, e), 0);
        LEAVE_RECORD();
    }
    errno = e;
    return ret;
}

int accept(int fd, struct sockaddr *addr, socklen_t *addr_len)
{
    LOAD(accept);
    int ret = real_accept(fd, addr, addr_len);
    int e = errno;
    if (RECORDING_ACTIVE() && fd_is_socket(fd)) {
        ENTER_RECORD();
        if (ret >= 0)
            fd_set_flags(ret, FDF_SOCKET);
        record_addr_call("accept", fd, (ret >= 0 && addr && addr_len) ? addr : NULL,
                         (ret >= 0 && addr_len) ? *addr_len : 0, 0, 0, ret,
                         err_of(ret, e));
        LEAVE_RECORD();
    }
    errno = e;
    return ret;
}

int accept4(int fd, struct sockaddr *addr, socklen_t *addr_len, int flags)
{
    LOAD(accept4);
    int ret = real_accept4(fd, addr, addr_len, flags);
    int e = errno;
    if (RECORDING_ACTIVE() && fd_is_socket(fd)) {
        ENTER_RECORD();
        if (ret >= 0)
            fd_set_flags(ret, FDF_SOCKET);
        record_addr_call("accept4", fd,
                         (ret >= 0 && addr && addr_len) ? addr : NULL,
                         (ret >= 0 && addr_len) ? *addr_len : 0, flags, 0,
                         ret, err_of(ret, e));
        LEAVE_RECORD();
    }
    errno = e;
    return ret;
}

/* ------------------------------------------------------------------ */
/* wrappers: naming, teardown                                          */
/* ------------------------------------------------------------------ */

int bind(int fd, const struct sockaddr *addr, socklen_t len)
{
    LOAD(bind);
    int ret = real_bind(fd, addr, len);
    int e = errno;
    if (RECORDING_ACTIVE() && fd_is_socket(fd)) {
        ENTER_RECORD();
        record_addr_call("bind", fd, addr, len, 0, 1, ret, err_of(ret, e));
        LEAVE_RECORD();
    }
    errno = e;
    return ret;
}

int connect(int fd, const struct sockaddr *addr, socklen_t len)
{
    LOAD(connect);
    int ret = real_connect(fd, addr, len);
    int e = errno;
    if (RECORDING_ACTIVE() && fd_is_socket(fd)) {
        ENTER_RECORD();
        record_addr_call("connect", fd, addr, len, 0, 1, ret, err_of(ret, e));
        LEAVE_RECORD();
    }
    errno = e;
    return ret;
}

int listen(int fd, int backlog)
{
    LOAD(listen);
    int ret = real_listen(fd, backlog);
    int e = errno;
    if (RECORDING_ACTIVE() && fd_is_socket(fd)) {
        ENTER_RECORD();
        char storage[LINE_CAP];
        sb b;
        rec_begin(&b, storage, sizeof(storage), "listen");
        sb_puts(&b, "\"fd\":");
        sb_i64(&b, fd);
        sb_puts(&b, ",\"backlog\":");
        sb_i64(&b, backlog);
        rec_end(&b, ret, err_of(ret, e), 0);
        LEAVE_RECORD();
    }
    errno = e;
    return ret;
}

int getsockname(int fd, struct sockaddr *addr, socklen_t *len)
{
    LOAD(getsockname);
    int ret = real_getsockname(fd, addr, len);
    int e = errno;
    if (RECORDING_ACTIVE() && fd_is_socket(fd)) {
        ENTER_RECORD();
        record_addr_call("getsockname", fd,
                         (ret == 0 && addr && len) ? addr : NULL,
                         (ret == 0 && len) ? *len : 0, 0, 0, ret,
                         err_of(ret, e));
        LEAVE_RECORD();
    }
    errno = e;
    return ret;
}

int getpeername(int fd, struct sockaddr *addr, socklen_t *len)
{
    LOAD(getpeername);
    int ret = real_getpeername(fd, addr, len);
    int e = errno;
    if (RECORDING_ACTIVE() && fd_is_socket(fd)) {
        ENTER_RECORD();
        record_addr_call("getpeername", fd,
                         (ret == 0 && addr && len) ? addr : NULL,
                         (ret == 0 && len) ? *len : 0, 0, 0, ret,
                         err_of(ret, e));
        LEAVE_RECORD();
    }
    errno = e;
    return ret;
}

int shutdown(int fd, int how)
{
    LOAD(shutdown);
    int ret = real_shutdown(fd, how);
    int e = errno;
    if (RECORDING_ACTIVE() && fd_is_socket(fd)) {
        ENTER_RECORD();
        char storage[LINE_CAP];
        sb b;
        rec_begin(&b, storage, sizeof(storage), "shutdown");
        sb_puts(&b, "\"fd\":");
        sb_i64(&b, fd);
        sb_puts(&b, ",\"how\":");
        sb_jstr(&b, how == SHUT_RD ? "rd" : how == SHUT_WR ? "wr" : "rdwr");
        rec_end(&b, ret, err_of(ret, e), 1);
        LEAVE_RECORD();
    }
    errno = e;
    return ret;
}

int close(int fd)
{
    LOAD(close);
    int was_socket = g_enabled && fd_is_socket(fd);
    int ret = real_close(fd);
    int e = errno;
    if (g_enabled && fd >= 0 && fd < FD_TABLE_SIZE)
        fd_set_flags(fd, 0);
    if (RECORDING_ACTIVE() && was_socket) {
        ENTER_RECORD();
        char storage[LINE_CAP];
        sb b;
        rec_begin(&b, storage, sizeof(storage), "close");
        sb_puts(&b, "\"fd\":");
        sb_i64(&b, fd);
        rec_end(&b, ret, ret != 0 ? e : 0, 1); /* flush: survive later kills */
        LEAVE_RECORD();
    }
    errno = e;
    return ret;
}

/* ------------------------------------------------------------------ */
/* wrappers: descriptor duplication                                    */
/* ------------------------------------------------------------------ */

int dup(int oldfd)
{
    LOAD(dup);
    int ret = real_dup(oldfd);
    int e = errno;
    if (RECORDING_ACTIVE() && fd_is_socket(oldfd)) {
        ENTER_RECORD();
        if (ret >= 0)
            fd_set_flags(ret, FDF_SOCKET);
        char storage[LINE_CAP];
        sb b;
        rec_begin(&b, storage, sizeof(storage), "dup");
        sb_puts(&b, "\"oldfd\":");
        sb_i64(&b, oldfd);
        sb_puts(&b, ",\"newfd\":");
        sb_i64(&b, ret);
        rec_end(&b, ret, err_of(ret, e), 0);
        LEAVE_RECORD();
    }
    errno = e;
    return ret;
}

static int dup_pair(const char *fn, int oldfd, int newfd, int ret, int e)
{
    /* newfd was implicitly closed by a successful dup2/dup3 */
    if (ret >= 0 && g_enabled) {
        if (fd_is_socket(oldfd))
            fd_set_flags(newfd, FDF_SOCKET);
        else
            fd_set_flags(newfd, 0);
    }
    if (RECORDING_ACTIVE() && fd_is_socket(oldfd)) {
        ENTER_RECORD();
        char storage[LINE_CAP];
        sb b;
        rec_begin(&b, storage, sizeof(storage), fn);
        sb_puts(&b, "\"oldfd\":");
        sb_i64(&b, oldfd);
        sb_puts(&b, ",\"newfd\":");
        sb_i64(&b, newfd);
        rec_end(&b, ret, err_of(ret, e), 1);
        LEAVE_RECORD();
    }
    return ret;
}

int dup2(int oldfd, int newfd)
{
    LOAD(dup2);
    int ret = real_dup2(oldfd, newfd);
    int e = errno;
    dup_pair("dup2", oldfd, newfd, ret, e);
    errno = e;
    return ret;
}

int dup3(int oldfd, int newfd, int flags)
{
    LOAD(dup3);
    int ret = real_dup3(oldfd, newfd, flags);
    int e = errno;
    dup_pair("dup3", oldfd, newfd, ret, e);
    errno = e;
    return ret;
}

/* ------------------------------------------------------------------ */
/* wrappers: payload transfer                                          */
/* ------------------------------------------------------------------ */

ssize_t send(int fd, const void *buf, size_t n, int flags)
{
    LOAD(send);
    ssize_t ret = real_send(fd, buf, n, flags);
    int e = errno;
    if (RECORDING_ACTIVE() && fd_is_socket(fd)) {
        ENTER_RECORD();
        record_io("send", fd, n, flags, 1, -1, NULL, 0, ret, err_of(ret, e));
        LEAVE_RECORD();
    }
    errno = e;
    return ret;
}

ssize_t sendto(int fd, const void *buf, size_t n, int flags,
               const struct sockaddr *addr, socklen_t addr_len)
{
    LOAD(sendto);
    ssize_t ret = real_sendto(fd, buf, n, flags, addr, addr_len);
    int e = errno;
    if (RECORDING_ACTIVE() && fd_is_socket(fd)) {
        ENTER_RECORD();
        record_io("sendto", fd, n, flags, 1, -1, addr, addr_len, ret,
                  err_of(ret, e));
        LEAVE_RECORD();
    }
    errno = e;
    return ret;
}

ssize_t sendmsg(int fd, const struct msghdr *msg, int flags)
{
    LOAD(sendmsg);
    ssize_t ret = real_sendmsg(fd, msg, flags);
    int e = errno;
    if (RECORDING_ACTIVE() && fd_is_socket(fd)) {
        ENTER_RECORD();
        unsigned long long total = msg ? iov_total(msg->msg_iov, (int)msg->msg_iovlen) : 0;
        record_io("sendmsg", fd, total, flags, 1,
                  msg ? (long long)msg->msg_iovlen : -1,
                  msg ? (const struct sockaddr *)msg->msg_name : NULL,
                  msg ? msg->msg_namelen : 0, ret, err_of(ret, e));
        LEAVE_RECORD();
    }
    errno = e;
    return ret;
}

int sendmmsg(int fd, struct mmsghdr *msgvec, unsigned int vlen, int flags)
{
    LOAD(sendmmsg);
    int ret = real_sendmmsg(fd, msgvec, vlen, flags);
    int e = errno;
    if (RECORDING_ACTIVE() && fd_is_socket(fd)) {
        ENTER_RECORD();
        unsigned long long total = 0;
        unsigned int i;
        if (msgvec)
            for (i = 0; i < vlen; i++)
                total += iov_total(msgvec[i].msg_hdr.msg_iov,
                                   (int)msgvec[i].msg_hdr.msg_iovlen);
        record_io("sendmmsg", fd, total, flags, 1, (long long)vlen, NULL, 0,
                  ret, err_of(ret, e));
        LEAVE_RECORD();
    }
    errno = e;
    return ret;
}

ssize_t sendfile(int out_fd, int in_fd, off_t *offset, size_t count)
{
    LOAD(sendfile);
    ssize_t ret = real_sendfile(out_fd, in_fd, offset, count);
    int e = errno;
    if (RECORDING_ACTIVE() && fd_is_socket(out_fd)) {
        ENTER_RECORD();
        char storage[LINE_CAP];
        sb b;
        rec_begin(&b, storage, sizeof(storage), "sendfile");
        sb_puts(&b, "\"out_fd\":");
        sb_i64(&b, out_fd);
        sb_puts(&b, ",\"in_fd\":");
        sb_i64(&b, in_fd);
        sb_puts(&b, ",\"count\":");
        sb_u64(&b, count);
        rec_end(&b, ret, err_of(ret, e), 0);
        LEAVE_RECORD();
    }
    errno = e;
    return ret;
}

ssize_t write(int fd, const void *buf, size_t n)
{
    LOAD(write);
    ssize_t ret = real_write(fd, buf, n);
    int e = errno;
    if (RECORDING_ACTIVE() && fd_is_socket(fd)) {
        ENTER_RECORD();
        record_io("write", fd, n, 0, 0, -1, NULL, 0, ret, err_of(ret, e));
        LEAVE_RECORD();
    }
    errno = e;
    return ret;
}

ssize_t writev(int fd, const struct iovec *iov, int iovcnt)
{
    LOAD(writev);
    ssize_t ret = real_writev(fd, iov, iovcnt);
    int e = errno;
    if (RECORDING_ACTIVE() && fd_is_socket(fd)) {
        ENTER_RECORD();
        record_io("writev", fd, iov_total(iov, iovcnt), 0, 0, iovcnt, NULL, 0,
                  ret, err_of(ret, e));
        LEAVE_RECORD();
    }
    errno = e;
    return ret;
}

ssize_t recv(int fd, void *buf, size_t n, int flags)
{
    LOAD(recv);
    ssize_t ret = real_recv(fd, buf, n, flags);
    int e = errno;
    if (RECORDING_ACTIVE() && fd_is_socket(fd)) {
        ENTER_RECORD();
        record_io("recv", fd, n, flags, 1, -1, NULL, 0, ret, err_of(ret, e));
        LEAVE_RECORD();
    }
    errno = e;
    return ret;
}

ssize_t recvfrom(int fd, void *buf, size_t n, int flags,
                 struct sockaddr *addr, socklen_t *addr_len)
{
    LOAD(recvfrom);
    ssize_t ret = real_recvfrom(fd, buf, n, flags, addr, addr_len);
    int e = errno;
    if (RECORDING_ACTIVE() && fd_is_socket(fd)) {
        ENTER_RECORD();
        record_io("recvfrom", fd, n, flags, 1, -1,
                  (ret >= 0 && addr && addr_len) ? addr : NULL,
                  (ret >= 0 && addr_len) ? *addr_len : 0, ret,
                  err_of(ret, e));
        LEAVE_RECORD();
    }
    errno = e;
    return ret;
}

ssize_t recvmsg(int fd, struct msghdr *msg, int flags)
{
    LOAD(recvmsg);
    ssize_t ret = real_recvmsg(fd, msg, flags);
    int e = errno;
    if (RECORDING_ACTIVE() && fd_is_socket(fd)) {
        ENTER_RECORD();
        unsigned long long total = msg ? iov_total(msg->msg_iov, (int)msg->msg_iovlen) : 0;
        record_io("recvmsg", fd, total, flags, 1,
                  msg ? (long long)msg->msg_iovlen : -1,
                  (ret >= 0 && msg && msg->msg_namelen)
                      ? (const struct sockaddr *)msg->msg_name
                      : NULL,
                  (ret >= 0 && msg) ? msg->msg_namelen : 0, ret,
                  err_of(ret, e));
        LEAVE_RECORD();
    }
    errno = e;
    return ret;
}

int recvmmsg(int fd, struct mmsghdr *msgvec, unsigned int vlen, int flags,
             struct timespec *timeout)
{
    LOAD(recvmmsg);
    int ret = real_recvmmsg(fd, msgvec, vlen, flags, timeout);
    int e = errno;
    if (RECORDING_ACTIVE() && fd_is_socket(fd)) {
        ENTER_RECORD();
        unsigned long long total = 0;
        unsigned int i;
        if (msgvec)
            for (i = 0; i < vlen; i++)
                total += iov_total(msgvec[i].msg_hdr.msg_iov,
                                   (int)msgvec[i].msg_hdr.msg_iovlen);
        record_io("recvmmsg", fd, total, flags, 1, (long long)vlen, NULL, 0,
                  ret, err_of(ret, e));
        LEAVE_RECORD();
    }
    errno = e;
    return ret;
}

ssize_t read(int fd, void *buf, size_t n)
{
    LOAD(read);
    ssize_t ret = real_read(fd, buf, n);
    int e = errno;
    if (RECORDING_ACTIVE() && fd_is_socket(fd)) {
        ENTER_RECORD();
        record_io("read", fd, n, 0, 0, -1, NULL, 0, ret, err_of(ret, e));
        LEAVE_RECORD();
    }
    errno = e;
    return ret;
}

ssize_t readv(int fd, const struct iovec *iov, int iovcnt)
{
    LOAD(readv);
    ssize_t ret = real_readv(fd, iov, iovcnt);
    int e = errno;
    if (RECORDING_ACTIVE() && fd_is_socket(fd)) {
        ENTER_RECORD();
        record_io("readv", fd, iov_total(iov, iovcnt), 0, 0, iovcnt, NULL, 0,
                  ret, err_of(ret, e));
        LEAVE_RECORD();
    }
    errno = e;
    return ret;
}

/* ------------------------------------------------------------------ */
/* wrappers: options and control                                       */
/* ------------------------------------------------------------------ */

static void put_optval(sb *b, int level, int optname, const void *optval,
                       socklen_t optlen)
{
    if (!optval || optlen == 0)
        return;
    sb_puts(b, ",\"optval\":");
    if (level == SOL_SOCKET && optname == SO_LINGER &&
        optlen >= (socklen_t)sizeof(struct linger)) {
        const struct linger *lg = (const struct linger *)optval;
        sb_puts(b, "{\"onoff\":");
        sb_i64(b, lg->l_onoff);
        sb_puts(b, ",\"linger\":");
        sb_i64(b, lg->l_linger);
        sb_putc(b, '}');
        return;
    }
    if (level == SOL_SOCKET && (optname == SO_RCVTIMEO || optname == SO_SNDTIMEO) &&
        optlen >= (socklen_t)sizeof(struct timeval)) {
        const struct timeval *tv = (const struct timeval *)optval;
        sb_puts(b, "{\"sec\":");
        sb_i64(b, (long long)tv->tv_sec);
        sb_puts(b, ",\"usec\":");
        sb_i64(b, (long long)tv->tv_usec);
        sb_putc(b, '}');
        return;
    }
    if (optlen == (socklen_t)sizeof(int)) {
        int v;
        memcpy(&v, optval, sizeof(int));
        sb_i64(b, v);
        return;
    }
    sb_puts(b, "{\"len\":");
    sb_u64(b, optlen);
    sb_putc(b, '}');
}

static void record_sockopt(const char *fn, int fd, int level, int optname,
                           const void *optval, socklen_t optlen,
                           long long ret, int err)
{
    char storage[LINE_CAP], tmp1[24], tmp2[24];
    sb b;
    rec_begin(&b, storage, sizeof(storage), fn);
    sb_puts(&b, "\"fd\":");
    sb_i64(&b, fd);
    sb_puts(&b, ",\"level\":");
    sb_jstr(&b, level_name(level, tmp1, sizeof(tmp1)));
    sb_puts(&b, ",\"optname\":");
    sb_jstr(&b, optname_name(level, optname, tmp2, sizeof(tmp2)));
    put_optval(&b, level, optname, optval, optlen);
    rec_end(&b, ret, err, 0);
}

int getsockopt(int fd, int level, int optname, void *optval, socklen_t *optlen)
{
    LOAD(getsockopt);
    int ret = real_getsockopt(fd, level, optname, optval, optlen);
    int e = errno;
    if (RECORDING_ACTIVE() && fd_is_socket(fd)) {
        ENTER_RECORD();
        record_sockopt("getsockopt", fd, level, optname,
                       (ret == 0 && optval && optlen) ? optval : NULL,
                       (ret == 0 && optlen) ? *optlen : 0, ret,
                       err_of(ret, e));
        LEAVE_RECORD();
    }
    errno = e;
    return ret;
}

int setsockopt(int fd, int level, int optname, const void *optval,
               socklen_t optlen)
{
    LOAD(setsockopt);
    int ret = real_setsockopt(fd, level, optname, optval, optlen);
    int e = errno;
    if (RECORDING_ACTIVE() && fd_is_socket(fd)) {
        ENTER_RECORD();
        record_sockopt("setsockopt", fd, level, optname, optval, optlen, ret,
                       err_of(ret, e));
        LEAVE_RECORD();
    }
    errno = e;
    return ret;
}

int fcntl(int fd, int cmd, ...)
{
    LOAD(fcntl);
    va_list ap;
    va_start(ap, cmd);
    long arg = va_arg(ap, long);
    va_end(ap);
    int ret = real_fcntl(fd, cmd, arg);
    int e = errno;
    if (RECORDING_ACTIVE() && fd_is_socket(fd)) {
        ENTER_RECORD();
        if ((cmd == F_DUPFD || cmd == F_DUPFD_CLOEXEC) && ret >= 0)
            fd_set_flags(ret, FDF_SOCKET);
        char storage[LINE_CAP], tmp[24];
        sb b;
        rec_begin(&b, storage, sizeof(storage), "fcntl");
        sb_puts(&b, "\"fd\":");
        sb_i64(&b, fd);
        sb_puts(&b, ",\"cmd\":");
        sb_jstr(&b, fcntl_name(cmd, tmp, sizeof(tmp)));
        if (cmd == F_SETFL) {
            /* always present for F_SETFL so a cleared flag word shows up;
             * access-mode bits are not status flags */
            int fl = (int)arg & ~O_ACCMODE;
            if (fl == 0)
                sb_puts(&b, ",\"flags\":[]");
            else
                put_flag_list(&b, "flags", FILE_FLAGS, fl);
            sb_puts(&b, ",\"arg\":");
            sb_i64(&b, arg);
        } else if (cmd == F_SETFD || cmd == F_DUPFD ||
                   cmd == F_DUPFD_CLOEXEC || cmd == F_SETOWN) {
            sb_puts(&b, ",\"arg\":");
            sb_i64(&b, arg);
        }
        rec_end(&b, ret, err_of(ret, e), 0);
        LEAVE_RECORD();
    }
    errno = e;
    return ret;
}

int ioctl(int fd, unsigned long request, ...)
{
    LOAD(ioctl);
    va_list ap;
    va_start(ap, request);
    void *argp = va_arg(ap, void *);
    va_end(ap);
    int ret = real_ioctl(fd, request, argp);
    int e = errno;
    if (RECORDING_ACTIVE() && fd_is_socket(fd)) {
        ENTER_RECORD();
        char storage[LINE_CAP], tmp[32];
        sb b;
        rec_begin(&b, storage, sizeof(storage), "ioctl");
        sb_puts(&b, "\"fd\":");
        sb_i64(&b, fd);
        sb_puts(&b, ",\"request\":");
        sb_jstr(&b, ioctl_name(request, tmp, sizeof(tmp)));
        rec_end(&b, ret, err_of(ret, e), 0);
        LEAVE_RECORD();
    }
    errno = e;
    return ret;
}

/* ------------------------------------------------------------------ */
/* wrappers: readiness multiplexing                                    */
/* ------------------------------------------------------------------ */

static void record_wait(const char *fn, long long nfds, long long timeout_ms,
                        long long ret, int err)
{
    char storage[LINE_CAP];
    sb b;
    rec_begin(&b, storage, sizeof(storage), fn);
    sb_puts(&b, "\"nfds\":");
    sb_i64(&b, nfds);
    sb_puts(&b, ",\"timeout_ms\":");
    sb_i64(&b, timeout_ms);
    rec_end(&b, ret, err, 0);
}

static int pollset_has_socket(const struct pollfd *fds, nfds_t nfds)
{
    nfds_t i;
    if (!fds)
        return 0;
    for (i = 0; i < nfds; i++)
        if (fd_is_socket(fds[i].fd))
            return 1;
    return 0;
}

int poll(struct pollfd *fds, nfds_t nfds, int timeout)
{
    LOAD(poll);
    int interesting = RECORDING_ACTIVE() && pollset_has_socket(fds, nfds);
    int ret = real_poll(fds, nfds, timeout);
    int e = errno;
    if (interesting && RECORDING_ACTIVE()) {
        ENTER_RECORD();
        record_wait("poll", (long long)nfds, timeout, ret, err_of(ret, e));
        LEAVE_RECORD();
    }
    errno = e;
    return ret;
}

static long long ts_to_ms(const struct timespec *ts)
{
    if (!ts)
        return -1;
    return (long long)ts->tv_sec * 1000 + ts->tv_nsec / 1000000;
}

int ppoll(struct pollfd *fds, nfds_t nfds, const struct timespec *tmo_p,
          const sigset_t *sigmask)
{
    LOAD(ppoll);
    int interesting = RECORDING_ACTIVE() && pollset_has_socket(fds, nfds);
    long long tmo_ms = ts_to_ms(tmo_p);
    int ret = real_ppoll(fds, nfds, tmo_p, sigmask);
    int e = errno;
    if (interesting && RECORDING_ACTIVE()) {
        ENTER_RECORD();
        record_wait("ppoll", (long long)nfds, tmo_ms, ret, err_of(ret, e));
        LEAVE_RECORD();
    }
    errno = e;
    return ret;
}

static int fdset_has_socket(int nfds, const fd_set *a, const fd_set *b,
                            const fd_set *c)
{
    int fd;
    if (nfds > FD_SETSIZE)
        nfds = FD_SETSIZE;
    for (fd = 0; fd < nfds; fd++) {
        if (((a && FD_ISSET(fd, a)) || (b && FD_ISSET(fd, b)) ||
             (c && FD_ISSET(fd, c))) &&
            fd_is_socket(fd))
            return 1;
    }
    return 0;
}

int select(int nfds, fd_set *readfds, fd_set *writefds, fd_set *exceptfds,
           struct timeval *timeout)
{
    LOAD(select);
    int interesting =
        RECORDING_ACTIVE() && fdset_has_socket(nfds, readfds, writefds, exceptfds);
    long long tmo_ms = -1;
    if (timeout)
        tmo_ms = (long long)timeout->tv_sec * 1000 + timeout->tv_usec / 1000;
    int ret = real_select(nfds, readfds, writefds, exceptfds, timeout);
    int e = errno;
    if (interesting && RECORDING_ACTIVE()) {
        ENTER_RECORD();
        record_wait("select", nfds, tmo_ms, ret, err_of(ret, e));
        LEAVE_RECORD();
    }
    errno = e;
    return ret;
}

int pselect(int nfds, fd_set *readfds, fd_set *writefds, fd_set *exceptfds,
            const struct timespec *timeout, const sigset_t *sigmask)
{
    LOAD(pselect);
    int interesting =
        RECORDING_ACTIVE() && fdset_has_socket(nfds, readfds, writefds, exceptfds);
    long long tmo_ms = ts_to_ms(timeout);
    int ret = real_pselect(nfds, readfds, writefds, exceptfds, timeout, sigmask);
    int e = errno;
    if (interesting && RECORDING_ACTIVE()) {
        ENTER_RECORD();
        record_wait("pselect", nfds, tmo_ms, ret, err_of(ret, e));
        LEAVE_RECORD();
    }
    errno = e;
    return ret;
}

/* ------------------------------------------------------------------ */
/* wrappers: epoll                                                     */
/* ------------------------------------------------------------------ */

int epoll_create(int size)
{
    LOAD(epoll_create);
    int ret = real_epoll_create(size);
    int e = errno;
    if (RECORDING_ACTIVE()) {
        ENTER_RECORD();
        if (ret >= 0)
            fd_set_flags(ret, FDF_EPOLL);
        char storage[LINE_CAP];
        sb b;
        rec_begin(&b, storage, sizeof(storage), "epoll_create");
        sb_puts(&b, "\"size\":");
        sb_i64(&b, size);
        rec_end(&b, ret, err_of(ret, e), 0);
        LEAVE_RECORD();
    }
    errno = e;
    return ret;
}

int epoll_create1(int flags)
{
    LOAD(epoll_create1);
    int ret = real_epoll_create1(flags);
    int e = errno;
    if (RECORDING_ACTIVE()) {
        ENTER_RECORD();
        if (ret >= 0)
            fd_set_flags(ret, FDF_EPOLL);
        char storage[LINE_CAP];
        sb b;
        rec_begin(&b, storage, sizeof(storage), "epoll_create1");
        sb_puts(&b, "\"flags\":");
        sb_i64(&b, flags);
        rec_end(&b, ret, err_of(ret, e), 0);
        LEAVE_RECORD();
    }
    errno = e;
    return ret;
}

int epoll_ctl(int epfd, int op, int fd, struct epoll_event *event)
{
    LOAD(epoll_ctl);
    int ret = real_epoll_ctl(epfd, op, fd, event);
    int e = errno;
    if (RECORDING_ACTIVE() && fd_is_socket(fd)) {
        ENTER_RECORD();
        if (ret == 0 && op == EPOLL_CTL_ADD)
            fd_or_flags(epfd, FDF_EPOLL_HOT);
        char storage[LINE_CAP];
        sb b;
        rec_begin(&b, storage, sizeof(storage), "epoll_ctl");
        sb_puts(&b, "\"epfd\":");
        sb_i64(&b, epfd);
        sb_puts(&b, ",\"op\":");
        sb_jstr(&b, op == EPOLL_CTL_ADD   ? "add"
                    : op == EPOLL_CTL_MOD ? "mod"
                    : op == EPOLL_CTL_DEL ? "del"
                                          : "op");
        sb_puts(&b, ",\"fd\":");
        sb_i64(&b, fd);
        if (event)
            put_flag_list(&b, "events", EPOLL_EVENT_NAMES, (int)event->events);
        rec_end(&b, ret, err_of(ret, e), 0);
        LEAVE_RECORD();
    }
    errno = e;
    return ret;
}

static void record_epoll_wait(const char *fn, int epfd, int maxevents,
                              long long timeout_ms, long long ret, int err)
{
    char storage[LINE_CAP];
    sb b;
    rec_begin(&b, storage, sizeof(storage), fn);
    sb_puts(&b, "\"epfd\":");
    sb_i64(&b, epfd);
    sb_puts(&b, ",\"maxevents\":");
    sb_i64(&b, maxevents);
    sb_puts(&b, ",\"timeout_ms\":");
    sb_i64(&b, timeout_ms);
    rec_end(&b, ret, err, 0);
}

int epoll_wait(int epfd, struct epoll_event *events, int maxevents,
               int timeout)
{
    LOAD(epoll_wait);
    int ret = real_epoll_wait(epfd, events, maxevents, timeout);
    int e = errno;
    if (RECORDING_ACTIVE() && (fd_flags(epfd) & FDF_EPOLL_HOT)) {
        ENTER_RECORD();
        record_epoll_wait("epoll_wait", epfd, maxevents, timeout, ret,
                          err_of(ret, e));
        LEAVE_RECORD();
    }
    errno = e;
    return ret;
}

int epoll_pwait(int epfd, struct epoll_event *events, int maxevents,
                int timeout, const sigset_t *sigmask)
{
    LOAD(epoll_pwait);
    int ret = real_epoll_pwait(epfd, events, maxevents, timeout, sigmask);
    int e = errno;
    if (RECORDING_ACTIVE() && (fd_flags(epfd) & FDF_EPOLL_HOT)) {
        ENTER_RECORD();
        record_epoll_wait("epoll_pwait", epfd, maxevents, timeout, ret,
                          err_of(ret, e));
        LEAVE_RECORD();
    }
    errno = e;
    return ret;
}
