/** Interval polling with stale-response discarding.
 *
 * Every tick is tagged; a response is applied only if no newer tick has
 * started since, so slow responses can never overwrite fresh state.
 */

export class Poller<T> {
  private latest = 0;
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private readonly load: () => Promise<T>,
    private readonly apply: (value: T) => void,
    private readonly intervalMs = 1000,
    private readonly onError: (error: unknown) => void = () => {},
  ) {}

  start(): void {
    void this.tick();
    this.timer = setInterval(() => void this.tick(), this.intervalMs);
  }

  stop(): void {
    if (this.timer !== null) clearInterval(this.timer);
    this.timer = null;
    this.latest++;  // poison any in-flight response
  }

  async tick(): Promise<void> {
    const tag = ++this.latest;
    try {
      const value = await this.load();
      if (tag === this.latest) this.apply(value);
    } catch (error) {
      if (tag === this.latest) this.onError(error);
    }
  }
}
