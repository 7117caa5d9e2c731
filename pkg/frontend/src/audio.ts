// Audio playback boundary. The engine returns effects; the browser sink
// turns PlayAudio/StopAudio into an <audio> element, and background music
// into a second looping element. Tests substitute a recording sink.

export interface AudioSink {
  play(url: string): void;
  stop(): void;
  playMusic(url: string): void;
}

export class BrowserAudio implements AudioSink {
  private readonly player: HTMLAudioElement;
  private readonly music: HTMLAudioElement;

  constructor(win: Window & typeof globalThis) {
    this.player = new win.Audio();
    this.music = new win.Audio();
    this.music.loop = true;
    this.music.volume = 0.4;
  }

  play(url: string): void {
    this.player.src = url;
    void this.player.play().catch(() => {
      // autoplay may be blocked until the user interacts; harmless
    });
  }

  stop(): void {
    this.player.pause();
    this.player.currentTime = 0;
  }

  playMusic(url: string): void {
    this.music.src = url;
    void this.music.play().catch(() => {});
  }
}

export class RecordingAudio implements AudioSink {
  calls: Array<{ op: "play" | "stop" | "music"; url?: string }> = [];

  play(url: string): void {
    this.calls.push({ op: "play", url });
  }

  stop(): void {
    this.calls.push({ op: "stop" });
  }

  playMusic(url: string): void {
    this.calls.push({ op: "music", url });
  }
}
